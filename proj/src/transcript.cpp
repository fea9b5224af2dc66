#include "misgen/transcript.hpp"

#include <cstring>
#include <fstream>

namespace misgen::env {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));  // little-endian platform
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(const std::vector<uint8_t>& in, size_t& off) {
  if (off + sizeof(T) > in.size())
    throw TranscriptError("transcript truncated at byte offset " + std::to_string(off) + " (need " +
                          std::to_string(sizeof(T)) + " more bytes)");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

std::vector<uint8_t> to_mgt1(const EpisodeTranscript& t) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put<uint32_t>(out, kVersion);
  put<uint8_t>(out, static_cast<uint8_t>(t.family));
  put<uint8_t>(out, static_cast<uint8_t>(t.shift.coin_random_pct));
  put<uint8_t>(out, static_cast<uint8_t>(t.shift.cheese_mode));
  put<uint8_t>(out, static_cast<uint8_t>(t.shift.ambiguity_phase));
  put<uint8_t>(out, static_cast<uint8_t>(t.shift.keychest_ratio));
  put<uint8_t>(out, 0);
  put<uint8_t>(out, 0);
  put<uint8_t>(out, 0);
  put<uint64_t>(out, t.seed);
  put<uint32_t>(out, static_cast<uint32_t>(t.steps.size()));
  for (const TranscriptStep& s : t.steps) {
    put<uint8_t>(out, static_cast<uint8_t>(s.action));
    put<float>(out, s.reward);
    put<uint16_t>(out, static_cast<uint16_t>(s.tags));
  }
  return out;
}

void save_transcript(const EpisodeTranscript& t, const std::string& path) {
  std::vector<uint8_t> bytes = to_mgt1(t);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw TranscriptError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EpisodeTranscript simulate(Family family, uint64_t seed, const ShiftConfig& shift,
                           const std::vector<int>& actions) {
  Env env = Env::reset(family, seed, shift);
  EpisodeTranscript t;
  t.family = family;
  t.seed = seed;
  t.shift = shift;
  t.spawn = env.agent();
  for (int a : actions) {
    StepResult r = env.step(a);
    t.steps.push_back({a, r.reward, r.info, env.agent()});
    if (r.done) break;
  }
  t.terminal_tags = env.terminal_tags();
  return t;
}

EpisodeTranscript from_mgt1(const std::vector<uint8_t>& bytes) {
  size_t off = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw TranscriptError("bad magic: not an MGT1 transcript");
  off = 4;
  const uint32_t version = get<uint32_t>(bytes, off);
  if (version != kVersion) throw TranscriptError("unsupported MGT1 version " + std::to_string(version));

  ShiftConfig shift;
  const uint8_t fam = get<uint8_t>(bytes, off);
  if (fam > 3) throw TranscriptError("bad family id " + std::to_string(fam));
  shift.family = static_cast<Family>(fam);
  shift.coin_random_pct = get<uint8_t>(bytes, off);
  shift.cheese_mode = static_cast<worlds::CheeseMode>(get<uint8_t>(bytes, off));
  shift.ambiguity_phase = static_cast<worlds::AmbiguityPhase>(get<uint8_t>(bytes, off));
  shift.keychest_ratio = static_cast<worlds::KeyChestRatio>(get<uint8_t>(bytes, off));
  get<uint8_t>(bytes, off);
  get<uint8_t>(bytes, off);
  get<uint8_t>(bytes, off);
  const uint64_t seed = get<uint64_t>(bytes, off);
  const uint32_t n = get<uint32_t>(bytes, off);

  std::vector<int> actions;
  std::vector<float> rewards;
  std::vector<uint16_t> tags;
  for (uint32_t i = 0; i < n; ++i) {
    actions.push_back(get<uint8_t>(bytes, off));
    rewards.push_back(get<float>(bytes, off));
    tags.push_back(get<uint16_t>(bytes, off));
  }
  if (off != bytes.size())
    throw TranscriptError("trailing bytes after step stream at offset " + std::to_string(off));

  EpisodeTranscript t = simulate(shift.family, seed, shift, actions);
  if (t.steps.size() != n)
    throw TranscriptError("re-simulation length mismatch: stored " + std::to_string(n) + ", replayed " +
                          std::to_string(t.steps.size()));
  for (uint32_t i = 0; i < n; ++i) {
    if (t.steps[i].reward != rewards[i] || static_cast<uint16_t>(t.steps[i].tags) != tags[i])
      throw TranscriptError("re-simulation mismatch at step " + std::to_string(i));
  }
  return t;
}

EpisodeTranscript load_transcript(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TranscriptError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_mgt1(bytes);
}

}  // namespace misgen::env
