#pragma once

#include <string>
#include <vector>

#include "psprs/dataset.hpp"
#include "psprs/error.hpp"
#include "psprs/grm.hpp"

namespace psprs {

struct GrFitOptions {
  int quadrature_nodes = kDefaultQuadratureNodes;
  int max_iterations = 500;
  /// Stop when |ll_new - ll_old| / |ll_old| falls below this.
  double relative_tolerance = 1e-7;
  /// Newton iterations per M-step item update.
  int newton_steps = 25;
};

/// Thrown when EM hits max_iterations or the log-likelihood decreases.
class GrFitError : public ConvergenceError {
 public:
  GrFitError(const std::string& what, std::vector<double> trace)
      : ConvergenceError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

struct GrFitResult {
  GrModel model;
  /// Marginal log-likelihood after each EM iteration (starting values first).
  std::vector<double> trace;
};

/// Marginal maximum likelihood for the graded-response model by EM over a
/// fixed Gauss-Hermite grid. Rows are collapsed to unique response patterns
/// first, so duplicating every row scales the E-step counts exactly.
///
/// Categories never observed for an item are merged into a neighbour and
/// recorded in model.fit.notes. Throws InputError when an item shows a single
/// category, GrFitError on non-convergence or a log-likelihood decrease.
GrFitResult fit_grm(const ResponseRows& pooled, const ScoringScheme& scheme, const GrFitOptions& options = {});

/// Marginal log-likelihood of the rows under a model on the given grid.
double grm_log_likelihood(const GrModel& model, const ResponseRows& rows, int quadrature_nodes = kDefaultQuadratureNodes);

}  // namespace psprs
