#pragma once

#include "bandlq/cgls.hpp"
#include "bandlq/control.hpp"
#include "bandlq/error.hpp"
#include "bandlq/faber.hpp"
#include "bandlq/lyap_gp.hpp"
#include "bandlq/lyap_lsq.hpp"
#include "bandlq/lyapunov.hpp"
#include "bandlq/matrix_market.hpp"
#include "bandlq/model.hpp"
#include "bandlq/ordering.hpp"
#include "bandlq/parallel.hpp"
#include "bandlq/pattern.hpp"
#include "bandlq/problem.hpp"
#include "bandlq/report.hpp"
#include "bandlq/spai.hpp"
#include "bandlq/sparse.hpp"
#include "bandlq/spectrum.hpp"
