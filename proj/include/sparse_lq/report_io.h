#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "sparse_lq/experiment.h"
#include "sparse_lq/identifiability.h"

namespace sparse_lq {

/// File headers. Every float is printed with 17 significant digits.
inline constexpr const char* kRegretCsvHeader = "trial,seed,t,cost,regret";
inline constexpr const char* kEstimationCsvHeader =
    "n,trial,seed,lambda,distance,success";
inline constexpr const char* kPlotCsvHeader = "t,mean,q10,q50,q90";

std::string FormatDouble(double value);

nlohmann::json CertificateToJson(const IdentifiabilityCertificate& cert);
nlohmann::json ProfileToJson(const AssumptionProfile& profile);
nlohmann::json RegretSummary(const RegretReport& report);
nlohmann::json EstimationSummary(const EstimationReport& report);

/// Writes summary.json, regret_curves.csv, plot_mean.csv and a header-only
/// estimation.csv into `dir`. `timestamp` is the only nondeterministic field.
void EmitRegretOutputs(const RegretReport& report, const std::string& dir,
                       const std::string& timestamp);

/// Writes summary.json, estimation.csv and header-only regret files.
void EmitEstimationOutputs(const EstimationReport& report, const std::string& dir,
                           const std::string& timestamp);

void WriteJsonFile(const nlohmann::json& doc, const std::string& path);

struct ParsedCurve {
  std::uint64_t seed = 0;
  std::vector<std::int64_t> t;
  std::vector<double> costs;
  std::vector<double> regret;
};

/// Reads regret_curves.csv back, keyed by trial index.
std::map<int, ParsedCurve> ReadRegretCsv(const std::string& path);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string CurrentTimestamp();

}  // namespace sparse_lq
