#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "mlreg/classify.hpp"
#include "mlreg/cutoffs.hpp"
#include "mlreg/msequence.hpp"
#include "mlreg/signals.hpp"
#include "mlreg/wavefront.hpp"

namespace mlreg {

using json = nlohmann::json;

json to_json(const ClassParams& p);
json to_json(const InequalityCertificate& c);
json to_json(const Label& l);
json to_json(const SynthSpec& s);
json to_json(const SampledSignal& s);
json to_json(const Box& b);
json to_json(const DerivSups& d);

Label label_from_json(const json& j);
SynthSpec synth_spec_from_json(const json& j);
SampledSignal signal_from_json(const json& j);
Box box_from_json(const json& j);

// Non-finite doubles as null (JSON has no inf/nan).
json num(double v);

inline constexpr const char* tool_version = "mlreg 0.1.0";

json to_json(const Region& r);
json to_json(const CutoffFamily& f);
json to_json(const AdmissibilityCertificate& c);
json to_json(const FourierBoundReport& r);
json to_json(const Partition& p);  // summary only, no samples
// x followed by one column per member.
std::string cutoff_csv(const CutoffFamily& f, const SampledSignal& like);

json to_json(const Caps& c);
json to_json(const FeasibilityCert& c);
json to_json(const EnvelopeFit& f);
json to_json(const EmbeddingReport& r);
json to_json(const AlgebraReport& r);
json to_json(const OperatorMapping& m);
// tau, sigma, feasible, log_a, log_h, residual
std::string feasibility_csv(const std::vector<FeasibilityCert>& grid);

json to_json(const GridSpec& g);
json to_json(const WfConfig& c);
json to_json(const ConeSpec& c);
json to_json(const DecayFit& f);
json to_json(const WfReport& r);
// One row per entry: x[, y], dir_angle, tau, sigma, verdict_code, slope_deficit.
// verdict_code: 0 regular, 1 singular, 2 inconclusive.
std::string wf_csv(const WfReport& r);
json to_json(const SingsuppReport& r);
json to_json(const ProjectionReport& r);
json to_json(const RoundtripReport& r);
json to_json(const PseudolocalReport& r);

struct SummaryRow {
  std::string source, kind, status, detail;
};
// One row per report; status is PASS, FAIL or INFO.
std::vector<SummaryRow> summarize(const std::vector<std::pair<std::string, json>>& reports);
std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace mlreg
