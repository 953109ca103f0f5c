#include "lmrf/harness/reports.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "lmrf/common.hpp"
#include "lmrf/csv.hpp"

namespace lmrf::harness {

using csv::format_double;
using csv::format_optional;

namespace {

double quantile7(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::string lm_field(const std::optional<int>& lm) { return lm ? std::to_string(*lm) : ""; }

std::string csv_text(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

const LandmarkTable& test_table(const ExperimentResult& r, int split_id) {
  return r.splits.at(static_cast<std::size_t>(split_id - 1)).test;
}

}  // namespace

SummaryStat median_iqr(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of an empty sample");
  std::sort(values.begin(), values.end());
  return {values.size(), quantile7(values, 0.5), quantile7(values, 0.25), quantile7(values, 0.75)};
}

void write_trace_csv(std::ostream& out, std::span<const tuning::TracePoint> trace) {
  out << "step,phase,mtry,nodesize,subsample_fraction,objective,seconds\n";
  for (const auto& t : trace) {
    out << t.step << ',' << tuning::to_string(t.phase) << ',' << format_double(t.x.at(0)) << ','
        << format_double(t.x.at(1)) << ',' << (t.x.size() > 2 ? format_double(t.x[2]) : "NA") << ','
        << (std::isinf(t.objective) ? "Inf" : format_double(t.objective)) << ','
        << format_double(t.seconds) << '\n';
  }
}

void emit_reports(const ExperimentResult& result, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto& cells = result.cells;
  const auto ok = [](const CellResult& c) { return !c.error; };

  csv::write_atomically(dir / "metrics.csv", [&](std::ostream& out) {
    out << "split_id,model,scope,lm,metric,value\n";
    for (const auto& c : cells) {
      if (!ok(c)) continue;
      for (const auto& stratum : c.metrics) {
        const char* scope = stratum.lm ? "per-lm" : "pooled";
        for (const auto& m : stratum.values) {
          out << c.split_id << ',' << c.model << ',' << scope << ',' << lm_field(stratum.lm) << ','
              << m.metric << ',' << format_optional(m.value) << '\n';
        }
      }
    }
  });

  csv::write_atomically(dir / "timings.csv", [&](std::ostream& out) {
    out << "split_id,model,phase,seconds\n";
    for (const auto& c : cells) {
      if (!ok(c)) continue;
      const auto& t = c.output.timing;
      out << c.split_id << ',' << c.model << ",tune," << format_double(t.tune) << '\n';
      out << c.split_id << ',' << c.model << ",build," << format_double(t.build) << '\n';
      out << c.split_id << ',' << c.model << ",predict," << format_double(t.predict) << '\n';
    }
  });

  csv::write_atomically(dir / "predictions.csv", [&](std::ostream& out) {
    out << "split_id,model,admission_id,episode_id,lm,risk\n";
    for (const auto& c : cells) {
      if (!ok(c)) continue;
      const auto& rows = test_table(result, c.split_id).rows;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out << c.split_id << ',' << c.model << ',' << csv_text(rows[i].admission_id) << ','
            << rows[i].episode_id << ',' << rows[i].lm << ',' << format_double(c.output.risk[i]) << '\n';
      }
    }
  });

  csv::write_atomically(dir / "hyperparams.csv", [&](std::ostream& out) {
    out << "split_id,model,tuned,n_trees,mtry,nodesize,inbag,subsample_fraction\n";
    for (const auto& c : cells) {
      if (!ok(c)) continue;
      const auto& hp = c.output.hyperparams;
      const bool sub = hp.inbag == forest::InBagMode::SubsampleByAdmission;
      out << c.split_id << ',' << c.model << ',' << (c.output.tuned ? "true" : "false") << ','
          << hp.n_trees << ',' << hp.mtry << ',' << hp.nodesize << ',' << (sub ? "subsample" : "bootstrap")
          << ',' << (sub ? format_double(hp.subsample_fraction) : "NA") << '\n';
    }
  });

  csv::write_atomically(dir / "failures.csv", [&](std::ostream& out) {
    out << "split_id,model,error\n";
    for (const auto& c : cells) {
      if (c.error) out << c.split_id << ',' << c.model << ',' << csv_text(*c.error) << '\n';
    }
  });

  if (result.config.write_importance) {
    csv::write_atomically(dir / "importance.csv", [&](std::ostream& out) {
      out << "split_id,model,feature,mean_min_depth,usage\n";
      for (const auto& c : cells) {
        if (!ok(c)) continue;
        for (const auto& imp : c.output.importance) {
          out << c.split_id << ',' << c.model << ',' << imp.feature << ',' << format_double(imp.mean_min_depth)
              << ',' << format_double(imp.usage) << '\n';
        }
      }
    });
  }

  // Median and IQR across splits of every (model, scope, lm, metric).
  {
    using Key = std::tuple<std::size_t, int, int, std::size_t>;  // model order, pooled?, lm, metric order
    std::map<Key, std::vector<double>> groups;
    std::vector<std::string> models;
    for (const auto& c : cells) {
      if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
    }
    for (const auto& c : cells) {
      if (!ok(c)) continue;
      const auto model = static_cast<std::size_t>(std::find(models.begin(), models.end(), c.model) - models.begin());
      for (const auto& stratum : c.metrics) {
        for (std::size_t m = 0; m < stratum.values.size(); ++m) {
          const auto& v = stratum.values[m].value;
          Key key{model, stratum.lm ? 1 : 0, stratum.lm.value_or(-1), m};
          auto& bucket = groups[key];
          if (v) bucket.push_back(*v);
        }
      }
    }
    csv::write_atomically(dir / "summary.csv", [&](std::ostream& out) {
      out << "model,scope,lm,metric,n,median,q1,q3\n";
      for (const auto& [key, values] : groups) {
        const auto& [model, per_lm, lm, metric] = key;
        out << models[model] << ',' << (per_lm ? "per-lm" : "pooled") << ',' << (per_lm ? std::to_string(lm) : "")
            << ',' << metrics::kMetricNames[metric] << ',' << values.size() << ',';
        if (values.empty()) {
          out << "NA,NA,NA\n";
        } else {
          const auto s = median_iqr(values);
          out << format_double(s.median) << ',' << format_double(s.q1) << ',' << format_double(s.q3) << '\n';
        }
      }
    });
  }

  if (result.config.write_curves) {
    fs::create_directories(dir / "curves");
    csv::write_atomically(dir / "curves" / "calibration_deciles.csv", [&](std::ostream& out) {
      out << "split_id,model,mean_predicted,observed,n\n";
      for (const auto& c : cells) {
        if (!ok(c)) continue;
        for (const auto& pt : metrics::calibration_deciles(c.output.risk, c.output.outcome)) {
          out << c.split_id << ',' << c.model << ',' << format_double(pt.mean_predicted) << ','
              << format_double(pt.observed) << ',' << pt.n << '\n';
        }
      }
    });
    csv::write_atomically(dir / "curves" / "calibration_splines.csv", [&](std::ostream& out) {
      out << "split_id,model,predicted,observed\n";
      for (const auto& c : cells) {
        if (!ok(c)) continue;
        for (const auto& pt : metrics::calibration_splines(c.output.risk, c.output.outcome)) {
          out << c.split_id << ',' << c.model << ',' << format_double(pt.predicted) << ','
              << format_double(pt.observed) << '\n';
        }
      }
    });
    csv::write_atomically(dir / "curves" / "net_benefit.csv", [&](std::ostream& out) {
      out << "split_id,model,threshold,net_benefit,treat_all,treat_none\n";
      const auto grid = metrics::default_thresholds();
      for (const auto& c : cells) {
        if (!ok(c) || c.output.risk.empty()) continue;
        for (const auto& pt : metrics::net_benefit(c.output.risk, c.output.outcome, grid)) {
          out << c.split_id << ',' << c.model << ',' << format_double(pt.threshold) << ','
              << format_double(pt.model) << ',' << format_double(pt.treat_all) << ','
              << format_double(pt.treat_none) << '\n';
        }
      }
    });
    csv::write_atomically(dir / "curves" / "prediction_density.csv", [&](std::ostream& out) {
      out << "split_id,model,lower,upper,events,non_events\n";
      for (const auto& c : cells) {
        if (!ok(c)) continue;
        for (const auto& b : metrics::prediction_density(c.output.risk, c.output.outcome)) {
          out << c.split_id << ',' << c.model << ',' << format_double(b.lower) << ','
              << format_double(b.upper) << ',' << b.events << ',' << b.non_events << '\n';
        }
      }
    });
  }

  bool any_trace = false;
  for (const auto& c : cells) any_trace = any_trace || !c.output.trace.empty();
  if (any_trace) {
    fs::create_directories(dir / "tuning");
    for (const auto& c : cells) {
      if (c.output.trace.empty()) continue;
      csv::write_atomically(dir / "tuning" / ("split" + std::to_string(c.split_id) + "_" + c.model + ".csv"),
                            [&](std::ostream& out) { write_trace_csv(out, c.output.trace); });
    }
  }

  csv::write_atomically(dir / "config.json", [&](std::ostream& out) {
    nlohmann::json j = result.config;
    out << j.dump(2) << '\n';
  });
}

}  // namespace lmrf::harness
