#pragma once

#include "convex_tail/distribution.hpp"
#include "convex_tail/distribution_spec.hpp"
#include "convex_tail/envelope.hpp"
#include "convex_tail/errors.hpp"
#include "convex_tail/majorization.hpp"
#include "convex_tail/oracle.hpp"
#include "convex_tail/quadrature.hpp"
#include "convex_tail/serialize.hpp"
