#pragma once

// Output documents of a run: the JSON report, the per-batch CSV, the
// diagnostics-only JSON and the human-readable summary. The JSON documents
// depend only on the resolved config and the results, never on the worker
// count or the clock; run metadata lives in a separate run-info document.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "relsim/app/config.hpp"
#include "relsim/pipeline.hpp"

namespace relsim::app {

/// git describe of the source tree at configure time.
std::string build_id();

/// Disclosures attached to a report for this config (solver dependence of
/// the failure set, union-bound footnote).
std::vector<std::string> report_notes(const ExperimentConfig& config);

nlohmann::json report_to_json(const ReliabilityReport& report, const ExperimentConfig& config);
nlohmann::json diagnostics_report_to_json(const std::vector<LevelDiagnostics>& levels,
                                          const ExperimentConfig& config);

/// Columns level, batch, mean, samples, failures. Level 1 rows are the crude
/// Monte Carlo chunks; higher levels have one row per RWM chain.
std::string batches_csv(const ReliabilityReport& report);

std::string summary_text(const ReliabilityReport& report, const ExperimentConfig& config);
std::string diagnostics_summary_text(const std::vector<LevelDiagnostics>& levels);

/// Canonical text of a JSON document as written to disk.
std::string dump_document(const nlohmann::json& document);

/// Writes every file or none: contents go to temporaries that are renamed
/// into place only after all of them were written.
void write_files_atomically(const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace relsim::app
