#ifndef HYPERMIX_SERIALIZE_HPP_
#define HYPERMIX_SERIALIZE_HPP_

#include <json.hpp>
#include <span>
#include <string>

#include "hypermix/data_io.hpp"
#include "hypermix/losses.hpp"
#include "hypermix/metrics.hpp"
#include "hypermix/trainer.hpp"
#include "hypermix/vmf.hpp"

namespace hypermix {

using Json = nlohmann::ordered_json;

// Flat snake_case objects; CSV is a header line plus one row, numbers in
// %.17g.
Json to_json(const MetricReport& r);
Json to_json(const EceReport& r);
Json to_json(const RecallReport& r);
Json to_json(const LossValue& v);
Json to_json(const TheoremCheck& t);
Json to_json(const TrainRecord& r);
Json to_json(const MixLossConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const SynthConfig& c);

std::string to_csv(const MetricReport& r);
std::string to_csv(const EceReport& r);
std::string to_csv(const RecallReport& r);
std::string to_csv(const TheoremCheck& t);

// Columns bin_lo,bin_hi,count,mean_conf,mean_acc.
std::string reliability_csv(const EceReport& r);

std::string history_csv(std::span<const TrainRecord> history);
std::string history_jsonl(std::span<const TrainRecord> history);

// Missing keys keep their defaults; unknown keys and type or range errors
// throw InvalidConfig naming the field.
TrainConfig train_config_from_json(const nlohmann::json& j);
MixLossConfig mix_loss_config_from_json(const nlohmann::json& j, const std::string& prefix = "");

std::string format_double(double x);

}  // namespace hypermix

#endif  // HYPERMIX_SERIALIZE_HPP_
