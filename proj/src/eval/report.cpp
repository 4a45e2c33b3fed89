#include <cstdio>
#include <sstream>

#include "dmtl/evalrank.hpp"

namespace dmtl::eval {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json report_json(const EvalReport& report) {
  nlohmann::ordered_json out;
  out["dataset"] = report.dataset;
  out["protocol"] = {
      {"relevance_threshold", report.protocol.threshold},
      {"k", report.protocol.k},
      {"precision_denominator", to_string(report.protocol.denominator)},
      {"candidates", to_string(report.protocol.candidates)},
  };
  auto methods = nlohmann::ordered_json::array();
  for (const MethodResult& m : report.methods) {
    methods.push_back({
        {"tag", m.tag},
        {"name", m.name},
        {"precision_at_k", m.metrics.precision},
        {"recall_at_k", m.metrics.recall},
        {"groups_evaluated", m.metrics.evaluated},
        {"groups_skipped", m.metrics.skipped},
    });
  }
  out["methods"] = std::move(methods);
  if (report.profiling) {
    const ProfilingMetrics& p = *report.profiling;
    out["profiling"] = {
        {"averaging", "weighted"}, {"precision", p.precision}, {"recall", p.recall},
        {"f1", p.f1},              {"samples", p.samples},     {"confusion", p.confusion},
    };
  }
  out["metadata"] = report.metadata;
  return out;
}

std::string report_markdown(const EvalReport& report) {
  const std::string k = std::to_string(report.protocol.k);
  std::ostringstream md;
  md << "# Recommendation results\n\n";
  md << "| Method | " << report.dataset << " P@" << k << " | " << report.dataset << " R@" << k << " |\n";
  md << "|---|---|---|\n";
  for (const MethodResult& m : report.methods) {
    md << "| " << m.name << " | " << fixed4(m.metrics.precision) << " | " << fixed4(m.metrics.recall) << " |\n";
  }
  md << "\nRelevance: rating >= " << report.protocol.threshold << "; candidates: "
     << to_string(report.protocol.candidates) << "; P@" << k
     << " denominator: " << to_string(report.protocol.denominator) << ".\n";
  if (report.profiling) {
    const ProfilingMetrics& p = *report.profiling;
    md << "\n# Group profiling\n\n";
    md << "| Dataset | Precision | Recall | F1 |\n|---|---|---|---|\n";
    md << "| " << report.dataset << " | " << fixed4(p.precision) << " | " << fixed4(p.recall) << " | "
       << fixed4(p.f1) << " |\n";
    md << "\nWeighted by class support over " << p.samples << " users.\n";
  }
  return md.str();
}

}  // namespace dmtl::eval
