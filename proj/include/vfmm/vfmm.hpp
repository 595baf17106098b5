#pragma once

#include "vfmm/errors.hpp"
#include "vfmm/model.hpp"
#include "vfmm/kernels.hpp"
#include "vfmm/quadtree.hpp"
#include "vfmm/expansions.hpp"
#include "vfmm/fmm.hpp"
#include "vfmm/errorlab.hpp"
#include "vfmm/harness.hpp"
