#pragma once

// Umbrella header: mesh-free estimation of elliptic operators on point-cloud
// manifolds with boundary, plus boundary-value and eigenvalue solvers.

#include "core.hpp"
#include "pointcloud.hpp"
#include "boundary.hpp"
#include "operators.hpp"
#include "extrapolation.hpp"
#include "pde.hpp"
#include "eig.hpp"
#include "fixtures.hpp"
#include "experiments.hpp"
#include "io.hpp"
