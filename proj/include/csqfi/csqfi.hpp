#pragma once

#include "csqfi/dynamics.hpp"
#include "csqfi/errors.hpp"
#include "csqfi/metrology.hpp"
#include "csqfi/optimize.hpp"
#include "csqfi/quadrature.hpp"
#include "csqfi/response.hpp"
#include "csqfi/response_cache.hpp"
#include "csqfi/response_types.hpp"
#include "csqfi/specfun.hpp"
