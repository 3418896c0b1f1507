#include "sparse_lq/report_io.h"

#include <cerrno>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparse_lq/errors.h"

namespace sparse_lq {

namespace {

using nlohmann::json;

json Number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json SubsetJson(const Subset& s) { return json(s); }

std::filesystem::path PrepareDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return std::filesystem::path(dir);
}

// Buffered writer that reports the path on failure.
class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path) : path_(path.string()) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open '" + path_ + "' for writing");
  }
  std::ofstream& stream() { return out_; }
  void Close() {
    out_.close();
    if (!out_) throw IoError("failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

json EventJson(const RegretReport& r) {
  return {{"e1_frequency", r.e1_frequency},
          {"e2_frequency", r.e2_frequency},
          {"state_bound_frequency", r.state_bound_frequency}};
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

json CertificateToJson(const IdentifiabilityCertificate& cert) {
  return {{"valid", cert.valid()},
          {"rho", Number(cert.rho)},
          {"c_min", Number(cert.c_min)},
          {"alpha", Number(cert.alpha)},
          {"k", cert.k},
          {"worst_c_min_subset", SubsetJson(cert.worst_c_min_subset)},
          {"worst_alpha_subset", SubsetJson(cert.worst_alpha_subset)},
          {"subsets_visited", cert.subsets_visited},
          {"any_singular", cert.any_singular},
          {"h", MatrixToJson(cert.h_mat)}};
}

json ProfileToJson(const AssumptionProfile& profile) {
  return {{"eps", profile.eps},
          {"samples", profile.samples},
          {"sigma_l", Number(profile.sigma_l)},
          {"sigma_k", Number(profile.sigma_k)},
          {"ell_theta_eps", Number(profile.ell_theta_eps)},
          {"riccati_failures", profile.riccati_failures},
          {"non_identifiable", profile.non_identifiable},
          {"worst_alpha", Number(profile.worst_alpha)},
          {"worst_c_min", Number(profile.worst_c_min)},
          {"worst_rho", Number(profile.worst_rho)}};
}

json RegretSummary(const RegretReport& r) {
  json failures = json::array();
  json distances = json::array();
  for (const TrialOutcome& t : r.trials) {
    distances.push_back(Number(t.final_distance));
    if (!t.ok) failures.push_back({{"trial", t.trial}, {"seed", t.seed}, {"error", t.error}});
  }
  json horizons = json::array();
  for (std::size_t i = 0; i < r.horizons.size(); ++i) {
    horizons.push_back({{"T", r.horizons[i]},
                        {"mean_regret", Number(r.mean_regret[i])},
                        {"stderr_regret", Number(r.stderr_regret[i])},
                        {"mean_regret_over_T",
                         Number(r.mean_regret[i] / static_cast<double>(r.horizons[i]))}});
  }
  return {{"kind", "regret"},
          {"master_seed", r.master_seed},
          {"config", ConfigToJson(r.config)},
          {"j_star", r.j_star},
          {"certificate", CertificateToJson(r.certificate)},
          {"ell", r.ell},
          {"n0", r.n0},
          {"n1", r.n1},
          {"warnings", r.warnings},
          {"trials", r.trials.size()},
          {"failed_trials", r.failed_trials},
          {"failures", failures},
          {"final_distances", distances},
          {"horizons", horizons},
          {"loglog_slope", Number(r.slope)},
          {"events", EventJson(r)}};
}

json EstimationSummary(const EstimationReport& r) {
  json grid = json::array();
  for (std::size_t g = 0; g < r.n_grid.size(); ++g) {
    grid.push_back({{"n", r.n_grid[g]},
                    {"success_frequency", r.success_frequency[g]},
                    {"mean_distance", Number(r.mean_distance[g])}});
  }
  return {{"kind", "estimation"},
          {"master_seed", r.master_seed},
          {"config", ConfigToJson(r.config)},
          {"certificate", CertificateToJson(r.certificate)},
          {"eps", r.eps},
          {"warnings", r.warnings},
          {"grid", grid}};
}

void WriteJsonFile(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

namespace {

void WriteRegretCsv(const RegretReport* report, const std::filesystem::path& path) {
  CsvFile file(path);
  auto& out = file.stream();
  out << kRegretCsvHeader << '\n';
  if (report != nullptr) {
    for (const TrialOutcome& t : report->trials) {
      for (Eigen::Index s = 0; s < t.costs.size(); ++s) {
        out << t.trial << ',' << t.seed << ',' << s << ',' << FormatDouble(t.costs[s])
            << ',' << FormatDouble(t.regret[s]) << '\n';
      }
    }
  }
  file.Close();
}

void WritePlotCsv(const RegretReport* report, const std::filesystem::path& path) {
  CsvFile file(path);
  auto& out = file.stream();
  out << kPlotCsvHeader << '\n';
  if (report != nullptr) {
    for (Eigen::Index s = 0; s < report->mean_curve.size(); ++s) {
      out << s << ',' << FormatDouble(report->mean_curve[s]) << ','
          << FormatDouble(report->q10_curve[s]) << ','
          << FormatDouble(report->q50_curve[s]) << ','
          << FormatDouble(report->q90_curve[s]) << '\n';
    }
  }
  file.Close();
}

void WriteEstimationCsv(const EstimationReport* report,
                        const std::filesystem::path& path) {
  CsvFile file(path);
  auto& out = file.stream();
  out << kEstimationCsvHeader << '\n';
  if (report != nullptr) {
    for (const EstimationTrial& t : report->trials) {
      out << t.n << ',' << t.trial << ',' << t.seed << ',' << FormatDouble(t.lambda)
          << ',' << FormatDouble(t.distance) << ',' << (t.success ? 1 : 0) << '\n';
    }
  }
  file.Close();
}

}  // namespace

void EmitRegretOutputs(const RegretReport& report, const std::string& dir,
                       const std::string& timestamp) {
  const auto root = PrepareDir(dir);
  json summary = RegretSummary(report);
  summary["generated_at"] = timestamp;
  WriteJsonFile(summary, (root / "summary.json").string());
  WriteRegretCsv(&report, root / "regret_curves.csv");
  WritePlotCsv(&report, root / "plot_mean.csv");
  WriteEstimationCsv(nullptr, root / "estimation.csv");
}

void EmitEstimationOutputs(const EstimationReport& report, const std::string& dir,
                           const std::string& timestamp) {
  const auto root = PrepareDir(dir);
  json summary = EstimationSummary(report);
  summary["generated_at"] = timestamp;
  WriteJsonFile(summary, (root / "summary.json").string());
  WriteEstimationCsv(&report, root / "estimation.csv");
  WriteRegretCsv(nullptr, root / "regret_curves.csv");
  WritePlotCsv(nullptr, root / "plot_mean.csv");
}

std::map<int, ParsedCurve> ReadRegretCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kRegretCsvHeader) {
    throw IoError("'" + path + "': unexpected header");
  }
  std::map<int, ParsedCurve> curves;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int trial = 0;
    std::uint64_t seed = 0;
    std::int64_t t = 0;
    char cost_buf[64], regret_buf[64];
    if (std::sscanf(line.c_str(), "%d,%" SCNu64 ",%" SCNd64 ",%63[^,],%63s", &trial,
                    &seed, &t, cost_buf, regret_buf) != 5) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) + ": malformed row");
    }
    ParsedCurve& curve = curves[trial];
    curve.seed = seed;
    curve.t.push_back(t);
    curve.costs.push_back(std::strtod(cost_buf, nullptr));
    curve.regret.push_back(std::strtod(regret_buf, nullptr));
  }
  return curves;
}

std::string CurrentTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sparse_lq
