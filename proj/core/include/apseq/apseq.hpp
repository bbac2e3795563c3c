#pragma once

#include "apseq/ap_analysis.hpp"
#include "apseq/discretization.hpp"
#include "apseq/errors.hpp"
#include "apseq/first_order_solver.hpp"
#include "apseq/higher_order.hpp"
#include "apseq/operator_model.hpp"
#include "apseq/parallel.hpp"
#include "apseq/report_json.hpp"
#include "apseq/resolvent_solvers.hpp"
#include "apseq/seq_core.hpp"
