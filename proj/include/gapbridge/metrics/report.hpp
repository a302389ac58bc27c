#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/metrics/pointwise.hpp"
#include "gapbridge/trajectory_io.hpp"

namespace gapbridge::metrics {

/// MSE (and MMSD/MCS for 2-component fields) of U_curr and U_nn against U_act.
struct ComparisonRow {
  std::string section;  // "split", "horizon", "cs_pod", "fft"
  std::string label;    // split name, frame interval, mode index...
  std::size_t first_frame = 0, last_frame = 0;
  double mse_curr = NAN, mse_nn = NAN;
  double mmsd_curr = NAN, mmsd_nn = NAN;
  double mcs_curr = NAN, mcs_nn = NAN;
};

inline ComparisonRow compare_sets(std::string section, std::string label, const ValueSet& curr, const ValueSet& nn,
                                  const ValueSet& act) {
  ComparisonRow r;
  r.section = std::move(section);
  r.label = std::move(label);
  r.mse_curr = mse_sets(curr, act);
  r.mse_nn = mse_sets(nn, act);
  if (act.components == 2) {
    r.mmsd_curr = mmsd(curr, act);
    r.mmsd_nn = mmsd(nn, act);
    r.mcs_curr = mcs(curr, act);
    r.mcs_nn = mcs(nn, act);
  }
  return r;
}

struct MetricReport {
  std::vector<ComparisonRow> rows;
  std::vector<double> cs_pod_curr, cs_pod_nn;  // per retained mode
  std::size_t pod_modes_act = 0, pod_modes_curr = 0, pod_modes_nn = 0;
  std::optional<double> freq_diff_curr, freq_diff_nn;

  const ComparisonRow* find(const std::string& section, const std::string& label) const {
    for (auto& r : rows)
      if (r.section == section && r.label == label) return &r;
    return nullptr;
  }

  /// One CSV row per split/interval/mode.
  void write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "section,label,first_frame,last_frame,metric,curr_vs_act,nn_vs_act\n";
    auto put = [&](const ComparisonRow& r, const char* metric, double c, double n) {
      if (std::isnan(c) && std::isnan(n)) return;
      os << r.section << ',' << r.label << ',' << r.first_frame << ',' << r.last_frame << ',' << metric << ','
         << io::fmt17(c) << ',' << io::fmt17(n) << '\n';
    };
    for (auto& r : rows) {
      put(r, "mse", r.mse_curr, r.mse_nn);
      put(r, "mmsd", r.mmsd_curr, r.mmsd_nn);
      put(r, "mcs", r.mcs_curr, r.mcs_nn);
    }
    for (std::size_t i = 0; i < std::max(cs_pod_curr.size(), cs_pod_nn.size()); ++i)
      os << "cs_pod,mode" << i + 1 << ",,,cosine," << (i < cs_pod_curr.size() ? io::fmt17(cs_pod_curr[i]) : "")
         << ',' << (i < cs_pod_nn.size() ? io::fmt17(cs_pod_nn[i]) : "") << '\n';
    if (freq_diff_curr || freq_diff_nn)
      os << "fft,peak_frequency,,,mean_rel_diff," << (freq_diff_curr ? io::fmt17(*freq_diff_curr) : "") << ','
         << (freq_diff_nn ? io::fmt17(*freq_diff_nn) : "") << '\n';
  }

  std::string summary() const {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "metric report\n";
    for (auto& r : rows) {
      os << "  [" << r.section << "] " << std::left << std::setw(16) << r.label << std::right
         << " frames " << r.first_frame << ".." << r.last_frame << "  MSE curr " << r.mse_curr << "  nn "
         << r.mse_nn;
      if (!std::isnan(r.mmsd_curr))
        os << "  MMSD curr " << r.mmsd_curr << " nn " << r.mmsd_nn << "  MCS curr " << r.mcs_curr << " nn "
           << r.mcs_nn;
      os << '\n';
    }
    if (pod_modes_act)
      os << "  POD modes retained: act " << pod_modes_act << ", curr " << pod_modes_curr << ", nn " << pod_modes_nn
         << '\n';
    for (std::size_t i = 0; i < cs_pod_nn.size() || i < cs_pod_curr.size(); ++i)
      os << "  CS-POD mode " << i + 1 << ": curr " << (i < cs_pod_curr.size() ? cs_pod_curr[i] : NAN) << "  nn "
         << (i < cs_pod_nn.size() ? cs_pod_nn[i] : NAN) << '\n';
    if (freq_diff_nn || freq_diff_curr)
      os << "  peak-frequency mean relative difference: curr " << freq_diff_curr.value_or(NAN) << "  nn "
         << freq_diff_nn.value_or(NAN) << '\n';
    return os.str();
  }
};

}  // namespace gapbridge::metrics
