#pragma once

#include "acceptance.hpp"
#include "action.hpp"
#include "arith.hpp"
#include "bc.hpp"
#include "boundary_qsm.hpp"
#include "cantor.hpp"
#include "errors.hpp"
#include "gas.hpp"
#include "linop.hpp"
#include "rational.hpp"
#include "series.hpp"
#include "summation.hpp"
