#include "rcgame/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rcgame {

double rc_error(double target_bits, double actual_bits) {
  if (!(target_bits > 0.0)) {
    throw std::domain_error("target bits must be positive");
  }
  return 100.0 * std::fabs(target_bits - actual_bits) / target_bits;
}

double psnr_proxy(double mse) {
  if (!(mse > 0.0)) throw std::domain_error("mse must be positive");
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

FluctuationStats fluctuation_stats(std::span<const double> series) {
  if (series.empty()) throw std::domain_error("empty series");
  FluctuationStats out;
  for (double v : series) out.mean += v;
  out.mean /= static_cast<double>(series.size());
  for (double v : series) {
    out.variance += (v - out.mean) * (v - out.mean);
  }
  out.variance /= static_cast<double>(series.size());
  return out;
}

RunMetrics compute_metrics(const SequenceReport& report) {
  RunMetrics m;
  m.per_frame_bits.reserve(report.frames.size());
  m.per_frame_psnr.reserve(report.frames.size());
  for (const auto& f : report.frames) {
    m.per_frame_bits.push_back(static_cast<double>(f.actual_bits));
    m.per_frame_psnr.push_back(psnr_proxy(f.mean_mse));
  }
  m.rc_error_percent = rc_error(report.target_total_bits,
                                static_cast<double>(report.actual_total_bits));
  const auto bits = fluctuation_stats(m.per_frame_bits);
  const auto psnr = fluctuation_stats(m.per_frame_psnr);
  m.bits_mean = bits.mean;
  m.bits_variance = bits.variance;
  m.mean_psnr = psnr.mean;
  m.psnr_variance = psnr.variance;
  return m;
}

GeoArithReport geomean_arithmean_report(const SequenceReport& report) {
  GeoArithReport out;
  out.per_frame.reserve(report.frames.size());
  for (const auto& f : report.frames) {
    MeanPair p{f.geo_mean_bpp, f.arith_mean_bpp};
    out.per_frame.push_back(p);
    if (p.arithmetic > 0.0) {
      out.max_relative_gap = std::max(
          out.max_relative_gap, (p.arithmetic - p.geometric) / p.arithmetic);
    }
  }
  return out;
}

namespace {

const char* source_tag(DecisionSource s) {
  switch (s) {
    case DecisionSource::Nash: return "nash";
    case DecisionSource::PlainLambdaFallback: return "plain";
    case DecisionSource::IntraProportional: return "intra";
  }
  return "?";
}

}  // namespace

void write_run_outputs(const std::string& dir, const std::string& run_name,
                       const SequenceReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const RunMetrics m = compute_metrics(report);

  {
    std::ofstream os(fs::path(dir) / (run_name + ".summary.txt"));
    os << std::setprecision(17);
    os << "run " << run_name << "\n";
    os << "target_bits " << report.target_total_bits << "\n";
    os << "actual_bits " << report.actual_total_bits << "\n";
    os << "rc_error_percent " << m.rc_error_percent << "\n";
    os << "mean_psnr " << m.mean_psnr << "\n";
    os << "psnr_variance " << m.psnr_variance << "\n";
    os << "bits_mean " << m.bits_mean << "\n";
    os << "bits_variance " << m.bits_variance << "\n";
  }
  {
    std::ofstream os(fs::path(dir) / (run_name + ".frames.csv"));
    os << std::setprecision(17);
    os << "frame,level,intra,target_bits,actual_bits,mean_mse,psnr,"
          "geo_mean_bpp,arith_mean_bpp,nash_ran,objective_game,"
          "objective_baseline\n";
    for (const auto& f : report.frames) {
      os << f.frame << ',' << f.level << ',' << (f.intra ? 1 : 0) << ','
         << f.target_bits << ',' << f.actual_bits << ',' << f.mean_mse << ','
         << psnr_proxy(f.mean_mse) << ',' << f.geo_mean_bpp << ','
         << f.arith_mean_bpp << ',' << (f.nash_ran ? 1 : 0) << ','
         << f.objective_game << ',' << f.objective_baseline << "\n";
    }
  }
  {
    std::ofstream os(fs::path(dir) / (run_name + ".ctus.csv"));
    os << std::setprecision(17);
    os << "frame,ctu,source,lambda,target_bpp,target_bits,actual_bits,mse\n";
    for (const auto& c : report.ctus) {
      os << c.frame << ',' << c.index << ',' << source_tag(c.source) << ','
         << c.lambda << ',' << c.target_bpp << ',' << c.target_bits << ','
         << c.actual_bits << ',' << c.d_actual << "\n";
    }
  }
}

LoadedRun load_run_outputs(const std::string& dir,
                           const std::string& run_name) {
  namespace fs = std::filesystem;
  LoadedRun out;
  {
    std::ifstream is(fs::path(dir) / (run_name + ".summary.txt"));
    if (!is) throw std::runtime_error("missing summary for run " + run_name);
    std::string key;
    while (is >> key) {
      if (key == "run") {
        std::string ignored;
        is >> ignored;
      } else if (key == "target_bits") {
        is >> out.summary_target_bits;
      } else if (key == "actual_bits") {
        is >> out.summary_actual_bits;
      } else if (key == "rc_error_percent") {
        is >> out.summary_rc_error;
      } else {
        double ignored;
        is >> ignored;
      }
    }
  }
  {
    std::ifstream is(fs::path(dir) / (run_name + ".frames.csv"));
    if (!is) throw std::runtime_error("missing frames.csv for run " + run_name);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::istringstream row(line);
      std::string col;
      while (std::getline(row, col, ',')) cols.push_back(col);
      if (cols.size() != 12) {
        throw std::runtime_error("malformed frames.csv row: " + line);
      }
      // strtod handles the nan/inf the objective columns may carry
      FrameLog f;
      f.frame = std::stoi(cols[0]);
      f.level = std::stoi(cols[1]);
      f.intra = cols[2] != "0";
      f.target_bits = std::strtod(cols[3].c_str(), nullptr);
      f.actual_bits = std::stoll(cols[4]);
      f.mean_mse = std::strtod(cols[5].c_str(), nullptr);
      f.geo_mean_bpp = std::strtod(cols[7].c_str(), nullptr);
      f.arith_mean_bpp = std::strtod(cols[8].c_str(), nullptr);
      f.nash_ran = cols[9] != "0";
      f.objective_game = std::strtod(cols[10].c_str(), nullptr);
      f.objective_baseline = std::strtod(cols[11].c_str(), nullptr);
      out.frames.push_back(f);
    }
  }
  return out;
}

}  // namespace rcgame
