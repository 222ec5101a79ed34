#pragma once

#include "varcause/causality.hpp"
#include "varcause/error.hpp"
#include "varcause/estimate.hpp"
#include "varcause/io.hpp"
#include "varcause/marginal.hpp"
#include "varcause/model.hpp"
#include "varcause/moments.hpp"
#include "varcause/reduction.hpp"
#include "varcause/rng.hpp"
#include "varcause/spectral.hpp"
