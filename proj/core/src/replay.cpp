#include "o2orl/replay.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace o2orl {

bool operator==(const Transition& lhs, const Transition& rhs) {
  return lhs.s == rhs.s && lhs.a == rhs.a && lhs.r == rhs.r &&
         lhs.s_next == rhs.s_next && lhs.done == rhs.done;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t pinned_prefix)
    : capacity_(capacity), pinned_(pinned_prefix), cursor_(pinned_prefix) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
  if (pinned_ >= capacity_) {
    throw std::invalid_argument("pinned prefix must leave room for new data");
  }
  storage_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (t.s.size() != t.s_next.size()) {
    throw std::invalid_argument("push: s and s_next dimensions differ");
  }
  if (!storage_.empty()) {
    if (t.s.size() != storage_.front().s.size() ||
        t.a.size() != storage_.front().a.size()) {
      throw std::invalid_argument(
          "push: transition dimensions do not match buffer contents (obs " +
          std::to_string(t.s.size()) + " vs " +
          std::to_string(storage_.front().s.size()) + ", act " +
          std::to_string(t.a.size()) + " vs " +
          std::to_string(storage_.front().a.size()) + ")");
    }
  }
  if (t.r != 1.0 && t.r != -1.0) {
    throw std::invalid_argument("push: reward must be -1 or +1, got " +
                                std::to_string(t.r));
  }
  for (double ai : t.a) {
    if (!(ai >= -1.0 && ai <= 1.0)) {
      throw std::invalid_argument("push: action component outside [-1,1]");
    }
  }

  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
    return;
  }
  storage_[cursor_] = std::move(t);
  cursor_ += 1;
  if (cursor_ >= capacity_) cursor_ = pinned_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size,
                                             Rng& rng) const {
  if (storage_.empty()) throw std::runtime_error("sample: buffer is empty");
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch.push_back(storage_[rng.uniform_index(storage_.size())]);
  }
  return batch;
}

std::size_t DemoDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.size();
  return n;
}

void validate(const DemoDataset& dataset) {
  for (std::size_t e = 0; e < dataset.episodes.size(); ++e) {
    const auto& ep = dataset.episodes[e];
    if (ep.empty()) {
      throw std::runtime_error("demo episode " + std::to_string(e) + " is empty");
    }
    for (const Transition& t : ep) {
      if (static_cast<int>(t.s.size()) != dataset.meta.obs_dim ||
          static_cast<int>(t.s_next.size()) != dataset.meta.obs_dim ||
          static_cast<int>(t.a.size()) != dataset.meta.act_dim) {
        throw std::runtime_error("demo episode " + std::to_string(e) +
                                 ": transition dimensions disagree with metadata");
      }
    }
    if (!ep.back().done) {
      throw std::runtime_error("demo episode " + std::to_string(e) +
                               " does not terminate with done");
    }
  }
}

namespace {

using nlohmann::json;

json meta_to_json(const DemoMeta& m) {
  return json{{"task", m.task},
              {"gsi", m.gsi},
              {"policy_id", m.policy_id},
              {"success_rate", m.success_rate},
              {"obs_dim", m.obs_dim},
              {"act_dim", m.act_dim},
              {"format_version", m.format_version}};
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line,
                          const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void save_demos(const DemoDataset& dataset, const std::string& path) {
  validate(dataset);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << meta_to_json(dataset.meta).dump() << "\n";
  for (std::size_t e = 0; e < dataset.episodes.size(); ++e) {
    const auto& ep = dataset.episodes[e];
    for (std::size_t k = 0; k < ep.size(); ++k) {
      const Transition& t = ep[k];
      json row{{"episode", e}, {"t", k},      {"s", t.s},
               {"a", t.a},     {"r", t.r},    {"s_next", t.s_next},
               {"done", t.done}};
      out << row.dump() << "\n";
    }
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

DemoDataset load_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  DemoDataset dataset;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) fail_at(path, 1, "missing metadata header");
  line_no = 1;
  json header;
  try {
    header = json::parse(line);
    dataset.meta.task = header.at("task").get<std::string>();
    dataset.meta.gsi = header.at("gsi").get<bool>();
    dataset.meta.policy_id = header.at("policy_id").get<std::string>();
    dataset.meta.success_rate = header.at("success_rate").get<double>();
    dataset.meta.obs_dim = header.at("obs_dim").get<int>();
    dataset.meta.act_dim = header.at("act_dim").get<int>();
    dataset.meta.format_version = header.at("format_version").get<int>();
  } catch (const json::exception& e) {
    fail_at(path, line_no, std::string("bad metadata header: ") + e.what());
  }
  if (dataset.meta.format_version != 1) {
    fail_at(path, line_no, "unsupported format_version " +
                               std::to_string(dataset.meta.format_version));
  }

  long last_episode = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json row;
    Transition t;
    long episode = 0;
    try {
      row = json::parse(line);
      episode = row.at("episode").get<long>();
      t.s = row.at("s").get<std::vector<double>>();
      t.a = row.at("a").get<std::vector<double>>();
      t.r = row.at("r").get<double>();
      t.s_next = row.at("s_next").get<std::vector<double>>();
      t.done = row.at("done").get<bool>();
    } catch (const json::exception& e) {
      fail_at(path, line_no, std::string("bad transition record: ") + e.what());
    }
    if (episode < last_episode) {
      fail_at(path, line_no, "episode indices must be nondecreasing");
    }
    if (episode != last_episode) {
      if (episode != last_episode + 1) {
        fail_at(path, line_no, "episode index skips ahead");
      }
      dataset.episodes.emplace_back();
      last_episode = episode;
    }
    dataset.episodes.back().push_back(std::move(t));
  }

  try {
    validate(dataset);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return dataset;
}

ReplayBuffer init_from_demos(const DemoDataset& dataset, std::size_t capacity,
                             bool pin_demos) {
  const std::size_t n = dataset.transition_count();
  if (capacity < n) {
    throw std::invalid_argument("replay capacity " + std::to_string(capacity) +
                                " is below the demo transition count " +
                                std::to_string(n));
  }
  ReplayBuffer buffer(capacity, pin_demos ? n : 0);
  for (const auto& ep : dataset.episodes) {
    for (const Transition& t : ep) buffer.push(t);
  }
  return buffer;
}

}  // namespace o2orl
