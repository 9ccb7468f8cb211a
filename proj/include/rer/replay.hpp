#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <vector>

#include "rer/rng.hpp"

namespace rer {

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Chain-consistent run of transitions: next_state of step t is the state
/// of step t+1.
class Episode {
 public:
  Episode() = default;
  /// Throws ValidationError on a chain break.
  explicit Episode(std::vector<Transition> transitions);

  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }
  const Transition& operator[](std::size_t i) const { return transitions_[i]; }
  const std::vector<Transition>& transitions() const { return transitions_; }

 private:
  std::vector<Transition> transitions_;
};

/// Index of the first chain break, or transitions.size() if consistent.
std::size_t first_chain_break(const std::vector<Transition>& transitions);

/// Which stored episode a window is drawn from.
enum class WindowSource { Random, MostRecent };

/// FIFO store of whole episodes bounded by a total transition count.
/// Single writer; samplers are const and take their own random stream.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Stores `ep`, evicting the oldest episodes until the capacity holds.
  /// Throws ValidationError for empty episodes or ones larger than the
  /// capacity.
  void append_episode(Episode ep);

  std::size_t capacity() const { return capacity_; }
  std::size_t num_transitions() const { return stored_; }
  std::size_t num_episodes() const { return episodes_.size(); }
  const std::deque<Episode>& episodes() const { return episodes_; }

  /// L consecutive transitions of one episode, forward time order.  With
  /// WindowSource::Random the episode is uniform among those with at least
  /// L steps; the offset is uniform among valid offsets.  Throws
  /// InsufficientData when no eligible episode exists.
  std::vector<Transition> sample_window(int L, Rng& rng, WindowSource source = WindowSource::Random) const;

  /// `batch` i.i.d. uniform draws over all stored transitions (with
  /// replacement).  Throws InsufficientData on an empty buffer.
  std::vector<Transition> sample_uniform(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t stored_ = 0;
  std::deque<Episode> episodes_;
};

/// Line format: "state action reward next_state" per transition, a blank
/// line between episodes.
void write_episodes(std::ostream& os, const std::vector<Episode>& episodes);
/// Throws ValidationError on malformed lines or chain breaks.
std::vector<Episode> read_episodes(std::istream& is);

}  // namespace rer
