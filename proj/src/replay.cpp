#include "rer/replay.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rer/errors.hpp"

namespace rer {

std::size_t first_chain_break(const std::vector<Transition>& transitions) {
  for (std::size_t t = 1; t < transitions.size(); ++t) {
    if (transitions[t - 1].next_state != transitions[t].state) return t;
  }
  return transitions.size();
}

Episode::Episode(std::vector<Transition> transitions) : transitions_(std::move(transitions)) {
  const std::size_t brk = first_chain_break(transitions_);
  if (brk != transitions_.size()) {
    throw ValidationError("episode breaks the chain at step " + std::to_string(brk) + ": next_state " +
                          std::to_string(transitions_[brk - 1].next_state) + " != state " +
                          std::to_string(transitions_[brk].state));
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw PreconditionError("replay capacity must be positive");
}

void ReplayBuffer::append_episode(Episode ep) {
  if (ep.empty()) throw ValidationError("cannot store an empty episode");
  if (first_chain_break(ep.transitions()) != ep.size()) throw ValidationError("episode is not chain-consistent");
  if (ep.size() > capacity_) {
    throw ValidationError("episode of " + std::to_string(ep.size()) + " steps exceeds capacity " +
                          std::to_string(capacity_));
  }
  while (stored_ + ep.size() > capacity_) {
    stored_ -= episodes_.front().size();
    episodes_.pop_front();
  }
  stored_ += ep.size();
  episodes_.push_back(std::move(ep));
}

std::vector<Transition> ReplayBuffer::sample_window(int L, Rng& rng, WindowSource source) const {
  if (L < 1) throw PreconditionError("window length must be >= 1");
  const auto len = static_cast<std::size_t>(L);
  const Episode* chosen = nullptr;
  if (source == WindowSource::MostRecent) {
    if (!episodes_.empty() && episodes_.back().size() >= len) chosen = &episodes_.back();
  } else {
    std::vector<const Episode*> eligible;
    for (const auto& ep : episodes_) {
      if (ep.size() >= len) eligible.push_back(&ep);
    }
    if (!eligible.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
      chosen = eligible[pick(rng)];
    }
  }
  if (chosen == nullptr) {
    throw InsufficientData("no stored episode has " + std::to_string(L) + " or more steps");
  }
  std::uniform_int_distribution<std::size_t> offset(0, chosen->size() - len);
  const std::size_t start = offset(rng);
  const auto& tr = chosen->transitions();
  return {tr.begin() + static_cast<std::ptrdiff_t>(start), tr.begin() + static_cast<std::ptrdiff_t>(start + len)};
}

std::vector<Transition> ReplayBuffer::sample_uniform(int batch, Rng& rng) const {
  if (batch < 1) throw PreconditionError("batch size must be >= 1");
  if (stored_ == 0) throw InsufficientData("replay buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, stored_ - 1);
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    std::size_t idx = pick(rng);
    for (const auto& ep : episodes_) {
      if (idx < ep.size()) {
        out.push_back(ep[idx]);
        break;
      }
      idx -= ep.size();
    }
  }
  return out;
}

void write_episodes(std::ostream& os, const std::vector<Episode>& episodes) {
  char buf[64];
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    if (e > 0) os << '\n';
    for (const auto& t : episodes[e].transitions()) {
      std::snprintf(buf, sizeof buf, "%.17g", t.reward);
      os << t.state << ' ' << t.action << ' ' << buf << ' ' << t.next_state << '\n';
    }
  }
}

std::vector<Episode> read_episodes(std::istream& is) {
  std::vector<Episode> out;
  std::vector<Transition> current;
  std::string line;
  std::size_t lineno = 0;
  const auto flush = [&] {
    if (!current.empty()) out.emplace_back(std::move(current));
    current.clear();
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
      continue;
    }
    std::istringstream ls(line);
    Transition t;
    std::string extra;
    if (!(ls >> t.state >> t.action >> t.reward >> t.next_state) || (ls >> extra)) {
      throw ValidationError("malformed transition on line " + std::to_string(lineno));
    }
    current.push_back(t);
  }
  flush();
  return out;
}

}  // namespace rer
