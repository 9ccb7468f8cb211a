#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rer/gamma.hpp"
#include "rer/qlearn.hpp"

namespace rer {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Verdict { Pass, Fail, Recorded };

std::string to_string(Verdict v);

struct VerificationReport {
  std::string check_id;
  std::map<std::string, std::string> inputs;
  std::string oracle_value;
  std::string formula_value;
  double deviation = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::Recorded;
};

/// Gating record: pass iff deviation <= tolerance.
VerificationReport gated(std::string check_id, std::map<std::string, std::string> inputs, std::string oracle,
                         std::string formula, double deviation, double tolerance);
/// Informational record; never affects exit status.
VerificationReport recorded(std::string check_id, std::map<std::string, std::string> inputs, std::string oracle,
                            std::string formula, double deviation);

struct ReportSummary {
  long pass = 0;
  long fail = 0;
  long recorded = 0;
};
ReportSummary summarize(std::span<const VerificationReport> reports);

/// {"schema": "rer.verification_report", "version": 1, "summary": ..., "checks": [...]}
std::string reports_to_json(std::span<const VerificationReport> reports);

/// Shortest round-trip decimal rendering.
std::string format_double(double x);

// CSV writers.  Each file starts with "# <schema> v<version>" followed by the
// column header; optional values are written as empty fields.
void write_bound_report_csv(std::ostream& os, std::span<const BoundReport> rows);
void write_grid_csv(std::ostream& os, std::span<const GridRow> rows);
void write_metrics_csv(std::ostream& os, std::span<const EpisodeMetrics> rows);
void write_envelope_csv(std::ostream& os, double eta, int L, double kappa, double delta, int max_syncs);
void write_bias_decay_csv(std::ostream& os, std::span<const BiasDecayRow> rows);

struct ExperimentManifest {
  std::string command;
  std::map<std::string, std::string> config;  ///< every effective parameter, rendered
  std::uint64_t seed = 0;
  std::string version = kArtifactVersion;
  std::string timestamp;  ///< UTC, ISO 8601
  std::vector<std::string> outputs;
};

std::string utc_timestamp();
std::string manifest_to_json(const ExperimentManifest& m);

}  // namespace rer
