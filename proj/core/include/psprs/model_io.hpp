#pragma once

#include <string>

#include "psprs/grm.hpp"
#include "psprs/latent_approx.hpp"

namespace psprs {

/// GrModel document (JSON), see docs/formats.md:
///   {"format": "psprs-grm", "version": 1, "scheme": ..., "latent_prior": "N(0,1)",
///    "items": [{"name", "column", "discrimination", "thresholds", "score_map"?}],
///    "fit": {"log_likelihood", "iterations", "rows", "converged", "quadrature_nodes", "notes"}}
std::string grm_to_json(const GrModel& model);
GrModel grm_from_json(const std::string& text);
void save_grm(const GrModel& model, const std::string& path);
GrModel load_grm(const std::string& path);

std::string approx_to_json(const LinearLatentApprox& approx);
LinearLatentApprox approx_from_json(const std::string& text);
void save_approx(const LinearLatentApprox& approx, const std::string& path);
LinearLatentApprox load_approx(const std::string& path);

}  // namespace psprs
