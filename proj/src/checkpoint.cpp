#include "misgen/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace misgen::train {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'C', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(const std::vector<uint8_t>& in, size_t& off) {
  if (off + sizeof(T) > in.size())
    throw CheckpointError("checkpoint truncated at byte offset " + std::to_string(off));
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

void put_floats(std::vector<uint8_t>& out, const std::vector<float>& v) {
  const uint8_t* p = reinterpret_cast<const uint8_t*>(v.data());
  out.insert(out.end(), p, p + v.size() * sizeof(float));
}

void get_floats(const std::vector<uint8_t>& in, size_t& off, std::vector<float>& v) {
  const size_t bytes = v.size() * sizeof(float);
  if (off + bytes > in.size())
    throw CheckpointError("checkpoint truncated in tensor data at byte offset " + std::to_string(off));
  std::memcpy(v.data(), in.data() + off, bytes);
  off += bytes;
}

}  // namespace

std::vector<uint8_t> to_mgc1(const TrainState& st) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put<uint32_t>(out, kVersion);
  put<uint8_t>(out, static_cast<uint8_t>(st.family));
  put<uint8_t>(out, static_cast<uint8_t>(st.shift.coin_random_pct));
  put<uint8_t>(out, static_cast<uint8_t>(st.shift.cheese_mode));
  put<uint8_t>(out, static_cast<uint8_t>(st.shift.ambiguity_phase));
  put<uint8_t>(out, static_cast<uint8_t>(st.shift.keychest_ratio));
  put<uint8_t>(out, 0);
  put<uint8_t>(out, 0);
  put<uint8_t>(out, 0);

  const num::ArchDesc& a = st.params.arch;
  for (int v : {a.in_channels, a.height, a.width, a.inventory_dim, a.action_count, a.conv1_channels,
                a.conv2_channels, a.hidden_dim})
    put<int32_t>(out, v);

  put<uint64_t>(out, st.seed);
  put<int64_t>(out, st.env_steps);
  put<uint64_t>(out, st.action_counter);
  put<uint64_t>(out, st.reset_counter);
  put<uint64_t>(out, st.shuffle_counter);
  put<int64_t>(out, st.adam.t);
  put<double>(out, st.adam.alpha);
  put<double>(out, st.adam.beta1);
  put<double>(out, st.adam.beta2);
  put<double>(out, st.adam.eps);

  std::vector<std::pair<std::string, const num::Tensor<float>*>> entries;
  st.params.for_each([&](const char* n, const num::Tensor<float>& t) { entries.push_back({n, &t}); });
  std::vector<const num::Tensor<float>*> ms, vs;
  st.adam.m.for_each([&](const char*, const num::Tensor<float>& t) { ms.push_back(&t); });
  st.adam.v.for_each([&](const char*, const num::Tensor<float>& t) { vs.push_back(&t); });

  put<uint32_t>(out, static_cast<uint32_t>(entries.size()));
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, tensor] = entries[i];
    put<uint16_t>(out, static_cast<uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<uint8_t>(out, static_cast<uint8_t>(tensor->shape.size()));
    for (int d : tensor->shape) put<int32_t>(out, d);
    put_floats(out, tensor->data);
    put_floats(out, ms[i]->data);
    put_floats(out, vs[i]->data);
  }
  return out;
}

TrainState from_mgc1(const std::vector<uint8_t>& bytes) {
  size_t off = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError("bad magic: not an MGC1 checkpoint");
  off = 4;
  const uint32_t version = get<uint32_t>(bytes, off);
  if (version != kVersion) throw CheckpointError("unsupported MGC1 version " + std::to_string(version));

  TrainState st;
  const uint8_t fam = get<uint8_t>(bytes, off);
  if (fam > 3) throw CheckpointError("bad family id " + std::to_string(fam));
  st.family = static_cast<Family>(fam);
  st.shift.family = st.family;
  st.shift.coin_random_pct = get<uint8_t>(bytes, off);
  st.shift.cheese_mode = static_cast<worlds::CheeseMode>(get<uint8_t>(bytes, off));
  st.shift.ambiguity_phase = static_cast<worlds::AmbiguityPhase>(get<uint8_t>(bytes, off));
  st.shift.keychest_ratio = static_cast<worlds::KeyChestRatio>(get<uint8_t>(bytes, off));
  get<uint8_t>(bytes, off);
  get<uint8_t>(bytes, off);
  get<uint8_t>(bytes, off);

  num::ArchDesc a;
  a.in_channels = get<int32_t>(bytes, off);
  a.height = get<int32_t>(bytes, off);
  a.width = get<int32_t>(bytes, off);
  a.inventory_dim = get<int32_t>(bytes, off);
  a.action_count = get<int32_t>(bytes, off);
  a.conv1_channels = get<int32_t>(bytes, off);
  a.conv2_channels = get<int32_t>(bytes, off);
  a.hidden_dim = get<int32_t>(bytes, off);

  st.seed = get<uint64_t>(bytes, off);
  st.env_steps = get<int64_t>(bytes, off);
  st.action_counter = get<uint64_t>(bytes, off);
  st.reset_counter = get<uint64_t>(bytes, off);
  st.shuffle_counter = get<uint64_t>(bytes, off);

  st.params = num::ParamSet<float>::zeros(a);
  st.adam = num::AdamState<float>::init(a, 1.0);
  st.adam.t = get<int64_t>(bytes, off);
  st.adam.alpha = get<double>(bytes, off);
  st.adam.beta1 = get<double>(bytes, off);
  st.adam.beta2 = get<double>(bytes, off);
  st.adam.eps = get<double>(bytes, off);

  std::vector<num::Tensor<float>*> ps, ms, vs;
  std::vector<std::string> names;
  st.params.for_each([&](const char* n, num::Tensor<float>& t) {
    names.push_back(n);
    ps.push_back(&t);
  });
  st.adam.m.for_each([&](const char*, num::Tensor<float>& t) { ms.push_back(&t); });
  st.adam.v.for_each([&](const char*, num::Tensor<float>& t) { vs.push_back(&t); });

  const uint32_t count = get<uint32_t>(bytes, off);
  if (count != ps.size())
    throw CheckpointError("tensor table size " + std::to_string(count) + " does not match architecture");
  for (size_t i = 0; i < ps.size(); ++i) {
    const uint16_t name_len = get<uint16_t>(bytes, off);
    if (off + name_len > bytes.size()) throw CheckpointError("checkpoint truncated in tensor name");
    std::string name(reinterpret_cast<const char*>(bytes.data() + off), name_len);
    off += name_len;
    if (name != names[i]) throw CheckpointError("unexpected tensor name '" + name + "'");
    const uint8_t ndim = get<uint8_t>(bytes, off);
    std::vector<int> shape;
    for (int d = 0; d < ndim; ++d) shape.push_back(get<int32_t>(bytes, off));
    if (shape != ps[i]->shape) throw CheckpointError("tensor shape mismatch for '" + name + "'");
    get_floats(bytes, off, ps[i]->data);
    get_floats(bytes, off, ms[i]->data);
    get_floats(bytes, off, vs[i]->data);
  }
  if (off != bytes.size()) throw CheckpointError("trailing bytes at offset " + std::to_string(off));
  return st;
}

void save_checkpoint(const TrainState& st, const std::string& path) {
  const std::vector<uint8_t> bytes = to_mgc1(st);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open " + tmp + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_mgc1(bytes);
}

}  // namespace misgen::train
