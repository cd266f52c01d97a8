#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "o2orl/rng.hpp"

namespace o2orl {

// One (s, a, r, s', done) sample. Rewards are the sparse {-1, +1} signal and
// actions live in [-1, 1] per component; push() enforces both.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = -1.0;
  std::vector<double> s_next;
  bool done = false;
};

bool operator==(const Transition& lhs, const Transition& rhs);

// Capacity-bounded FIFO ring. Once full the oldest entry is overwritten
// first; an optional pinned prefix (used to keep demonstration data resident)
// is excluded from eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity, std::size_t pinned_prefix = 0);

  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }

  // Uniform with-replacement draw; deterministic given the generator state.
  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t pinned_;
  std::size_t cursor_;  // next slot to overwrite once full
  std::vector<Transition> storage_;
};

struct DemoMeta {
  std::string task;
  bool gsi = false;
  std::string policy_id;
  double success_rate = 0.0;  // of the raw, unfiltered generating policy
  int obs_dim = 0;
  int act_dim = 0;
  int format_version = 1;
};

struct DemoDataset {
  DemoMeta meta;
  std::vector<std::vector<Transition>> episodes;

  std::size_t transition_count() const;
};

// Structural checks: consistent dimensions, every episode ends done=true,
// success episodes end with reward +1.
void validate(const DemoDataset& dataset);

// Line-delimited format: one JSON metadata header, then one JSON object per
// transition with keys {episode, t, s, a, r, s_next, done}. Values round-trip
// exactly.
void save_demos(const DemoDataset& dataset, const std::string& path);
DemoDataset load_demos(const std::string& path);

// New buffer holding every demo transition in episode order. Capacity must
// cover the dataset; pin_demos shields the demo prefix from ring eviction.
ReplayBuffer init_from_demos(const DemoDataset& dataset, std::size_t capacity,
                             bool pin_demos = false);

}  // namespace o2orl
