#pragma once

#include "qlbdf/bdf_core.hpp"
#include "qlbdf/consistency.hpp"
#include "qlbdf/errors.hpp"
#include "qlbdf/g_matrix.hpp"
#include "qlbdf/grid.hpp"
#include "qlbdf/history.hpp"
#include "qlbdf/mms.hpp"
#include "qlbdf/norms.hpp"
#include "qlbdf/spatial_operator.hpp"
#include "qlbdf/study.hpp"
#include "qlbdf/timestepper.hpp"
