#pragma once

#include "specsplit/assignment.hpp"
#include "specsplit/config.hpp"
#include "specsplit/ensembles.hpp"
#include "specsplit/error.hpp"
#include "specsplit/hs_projections.hpp"
#include "specsplit/matrix_io.hpp"
#include "specsplit/matrix_kernel.hpp"
#include "specsplit/ordering.hpp"
#include "specsplit/parallel.hpp"
#include "specsplit/random.hpp"
#include "specsplit/region.hpp"
#include "specsplit/serialize.hpp"
#include "specsplit/spectral_stats.hpp"
#include "specsplit/triangularize.hpp"
#include "specsplit/verify.hpp"
