#pragma once

// Everything except the command line front end.

#include "pathweave/analysis.hpp"
#include "pathweave/error.hpp"
#include "pathweave/evaluator.hpp"
#include "pathweave/expr.hpp"
#include "pathweave/graph_store.hpp"
#include "pathweave/io.hpp"
#include "pathweave/kernels.hpp"
#include "pathweave/path_matrix.hpp"
#include "pathweave/rewriter.hpp"
#include "pathweave/signatures.hpp"
#include "pathweave/syntax.hpp"
