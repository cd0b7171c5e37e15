#pragma once

#include "gpct/config.hpp"
#include "gpct/covariance.hpp"
#include "gpct/cross_validation.hpp"
#include "gpct/error.hpp"
#include "gpct/fbp.hpp"
#include "gpct/geometry.hpp"
#include "gpct/gp.hpp"
#include "gpct/hilbert_basis.hpp"
#include "gpct/io.hpp"
#include "gpct/lcurve.hpp"
#include "gpct/linalg.hpp"
#include "gpct/mcmc.hpp"
#include "gpct/metrics.hpp"
#include "gpct/phantom.hpp"
#include "gpct/projector.hpp"
