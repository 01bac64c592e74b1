#pragma once

#include <string>
#include <vector>

#include "kromfac/eval.hpp"
#include "kromfac/kron_model.hpp"
#include "kromfac/pipeline.hpp"
#include "kromfac/ranking.hpp"

namespace kromfac {

// JSON text for the artifacts written by the command-line tool. Every
// *_from_json throws std::invalid_argument on malformed input.

/// {"n0": int, "k": int, "theta": [[...], ...]}
std::string model_to_json(const KroneckerModel& model);
KroneckerModel model_from_json(const std::string& text);

/// {"observed": int, "sigma": [...]}
std::string mapping_to_json(const NodeMapping& mapping);
NodeMapping mapping_from_json(const std::string& text);

/// {"lambda", "h", "trace": [{"i", "loss", "reg_loss", "converged"}], "i_hat", ...}
std::string trace_to_json(const SearchTrace& trace);
SearchTrace trace_from_json(const std::string& text);

/// {"epsilon", "h", "order": [...], "centrality": {"id": degree}}, with ids in
/// the full-graph numbering of a graph with `observed` observed nodes.
std::string ranking_to_json(const Ranking& ranking, std::size_t observed);

/// Timing and timestamp live under "metadata".
std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

/// Header "i,loss,reg_loss,nmi" and one row per searched i.
std::string curve_csv(const ExperimentReport& report);

}  // namespace kromfac
