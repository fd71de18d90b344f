#pragma once

#include "channels.hpp"
#include "converse.hpp"
#include "exponents.hpp"
#include "gaussian.hpp"
#include "info.hpp"
#include "io.hpp"
#include "iproj.hpp"
#include "mac.hpp"
#include "metric_ops.hpp"
#include "multiuser.hpp"
#include "opt.hpp"
#include "oracle.hpp"
#include "problems.hpp"
#include "rd.hpp"
#include "su_rates.hpp"
#include "types.hpp"
