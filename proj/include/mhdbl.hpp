#pragma once

#include "mhdbl/grid.hpp"
#include "mhdbl/stencil.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/fields.hpp"
#include "mhdbl/norms.hpp"
#include "mhdbl/good_unknowns.hpp"
#include "mhdbl/monitor.hpp"
#include "mhdbl/manufactured.hpp"
#include "mhdbl/solver_primal.hpp"
#include "mhdbl/crocco.hpp"
#include "mhdbl/diagnostics.hpp"
#include "mhdbl/calibration.hpp"
#include "mhdbl/verify.hpp"
#include "mhdbl/io.hpp"
#include "mhdbl/app.hpp"
