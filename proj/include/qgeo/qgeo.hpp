#pragma once

// Everything in one include.

#include "qgeo/core.hpp"
#include "qgeo/hilbert.hpp"
#include "qgeo/kahler.hpp"
#include "qgeo/observables.hpp"
#include "qgeo/grid.hpp"
#include "qgeo/fft.hpp"
#include "qgeo/fisher.hpp"
#include "qgeo/madelung.hpp"
#include "qgeo/weyl.hpp"
#include "qgeo/experiments.hpp"
#include "qgeo/report.hpp"
#include "qgeo/identities.hpp"
#include "qgeo/io.hpp"
#include "qgeo/suites.hpp"
