#include "dfgan/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dfgan/errors.h"

namespace dfgan {

namespace {

using Json = nlohmann::json;

constexpr std::size_t kPreambleBytes = sizeof(kCheckpointMagic) + 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(b)]))
         << (8 * b);
  }
  return v;
}

[[noreturn]] void corrupt(std::size_t offset, const std::string& what) {
  throw IoError("checkpoint corrupt at byte offset " + std::to_string(offset) + ": " + what);
}

const std::vector<std::string>& state_store_names() {
  static const std::vector<std::string> names = {
      "generator", "discriminator", "noise",         "adam_g.m", "adam_g.v",
      "adam_d.m",  "adam_d.v",      "adam_n.m",      "adam_n.v"};
  return names;
}

ParamStore moments_store(const ParamStore& params, const std::vector<RealMatrix>& moments) {
  ParamStore out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamEntry& e = params.entry(i);
    out.add(e.name, i < moments.size() ? moments[i] : RealMatrix::Zero(e.value.rows(), e.value.cols()),
            e.trainable);
  }
  return out;
}

const ParamStore& find_store(const Checkpoint& ckpt, const std::string& name) {
  for (const auto& [n, store] : ckpt.stores) {
    if (n == name) return store;
  }
  throw IoError("checkpoint has no store named '" + name + "'");
}

void check_layout(const ParamStore& expected, const ParamStore& got, const std::string& store) {
  if (expected.size() != got.size()) {
    throw IoError("checkpoint store '" + store + "' has " + std::to_string(got.size()) +
                  " arrays, expected " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const ParamEntry& a = expected.entry(i);
    const ParamEntry& b = got.entry(i);
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols() ||
        a.trainable != b.trainable) {
      throw IoError("checkpoint shape mismatch in '" + store + "." + b.name + "': got " +
                    std::to_string(b.value.rows()) + "x" + std::to_string(b.value.cols()) +
                    ", expected '" + a.name + "' " + std::to_string(a.value.rows()) + "x" +
                    std::to_string(a.value.cols()));
    }
  }
}

void copy_values(ParamStore& dst, const ParamStore& src, const std::string& store) {
  check_layout(dst, src, store);
  for (std::size_t i = 0; i < dst.size(); ++i) dst.entry(i).value = src.entry(i).value;
  dst.mark_modified();
  dst.zero_grad();
}

void copy_moments(std::vector<RealMatrix>& dst, const ParamStore& params, const ParamStore& src,
                  const std::string& store) {
  check_layout(params, src, store);
  dst.clear();
  for (std::size_t i = 0; i < src.size(); ++i) dst.push_back(src.entry(i).value);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Json header;
  header["format"] = "dfgan-checkpoint";
  header["version"] = kCheckpointVersion;
  header["endianness"] = "little";
  header["dtype"] = "float64";
  header["meta"] = ckpt.meta;
  Json stores = Json::array();
  Json arrays = Json::array();
  std::uint64_t offset = 0;
  for (const auto& [store_name, store] : ckpt.stores) {
    stores.push_back(store_name);
    for (const ParamEntry& e : store.entries()) {
      arrays.push_back({{"store", store_name},
                        {"name", e.name},
                        {"rows", e.value.rows()},
                        {"cols", e.value.cols()},
                        {"offset", offset},
                        {"trainable", e.trainable}});
      offset += static_cast<std::uint64_t>(e.value.size()) * 8;
    }
  }
  header["stores"] = stores;
  header["arrays"] = arrays;
  header["data_bytes"] = offset;
  const std::string text = header.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& [store_name, store] : ckpt.stores) {
    for (const ParamEntry& e : store.entries()) {
      for (Eigen::Index k = 0; k < e.value.size(); ++k) {
        put_u64(out, std::bit_cast<std::uint64_t>(e.value.data()[k]));
      }
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kPreambleBytes) corrupt(bytes.size(), "file shorter than the preamble");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    corrupt(0, "bad magic");
  }
  const std::uint64_t header_len = get_u64(bytes, sizeof(kCheckpointMagic));
  if (header_len > bytes.size() - kPreambleBytes) {
    corrupt(bytes.size(), "header length " + std::to_string(header_len) + " exceeds file size");
  }
  Json header;
  try {
    header = Json::parse(bytes.begin() + kPreambleBytes,
                         bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleBytes + header_len));
  } catch (const Json::exception& e) {
    corrupt(kPreambleBytes, std::string("header is not valid JSON (") + e.what() + ")");
  }
  const std::size_t data_start = kPreambleBytes + header_len;

  Checkpoint ckpt;
  try {
    if (header.at("format") != "dfgan-checkpoint") corrupt(kPreambleBytes, "unknown format");
    if (header.at("version") != kCheckpointVersion) corrupt(kPreambleBytes, "unsupported version");
    if (header.at("endianness") != "little" || header.at("dtype") != "float64") {
      corrupt(kPreambleBytes, "unsupported endianness or dtype");
    }
    const auto data_bytes = header.at("data_bytes").get<std::uint64_t>();
    if (bytes.size() - data_start < data_bytes) {
      corrupt(bytes.size(), "truncated: expected " + std::to_string(data_bytes) +
                                " data bytes after offset " + std::to_string(data_start));
    }
    if (bytes.size() - data_start > data_bytes) {
      corrupt(data_start + data_bytes, "trailing bytes after the data section");
    }
    ckpt.meta = header.at("meta");
    std::map<std::string, std::size_t> slot;
    for (const auto& name : header.at("stores")) {
      const auto s = name.get<std::string>();
      if (slot.count(s)) corrupt(kPreambleBytes, "duplicate store '" + s + "'");
      slot[s] = ckpt.stores.size();
      ckpt.stores.emplace_back(s, ParamStore{});
    }
    std::uint64_t expected_offset = 0;
    for (const auto& a : header.at("arrays")) {
      const auto store = a.at("store").get<std::string>();
      const auto name = a.at("name").get<std::string>();
      const auto rows = a.at("rows").get<std::int64_t>();
      const auto cols = a.at("cols").get<std::int64_t>();
      const auto offset = a.at("offset").get<std::uint64_t>();
      if (rows < 0 || cols < 0) corrupt(kPreambleBytes, "negative shape for '" + name + "'");
      if (offset != expected_offset) {
        corrupt(data_start + offset, "array '" + store + "." + name + "' is not contiguous");
      }
      const std::uint64_t count = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
      if (offset + count * 8 > data_bytes) {
        corrupt(data_start + offset, "array '" + store + "." + name + "' runs past the data section");
      }
      auto it = slot.find(store);
      if (it == slot.end()) corrupt(kPreambleBytes, "array refers to unknown store '" + store + "'");
      RealMatrix value(rows, cols);
      for (std::uint64_t k = 0; k < count; ++k) {
        value.data()[k] = std::bit_cast<double>(get_u64(bytes, data_start + offset + 8 * k));
      }
      try {
        ckpt.stores[it->second].second.add(name, std::move(value), a.at("trainable").get<bool>());
      } catch (const ConfigError& e) {
        corrupt(data_start + offset, e.what());
      }
      expected_offset = offset + count * 8;
    }
    if (expected_offset != data_bytes) {
      corrupt(data_start + expected_offset, "data section size does not match the array list");
    }
  } catch (const Json::exception& e) {
    corrupt(kPreambleBytes, std::string("malformed header (") + e.what() + ")");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Checkpoint checkpoint_from_state(const TrainState& state) {
  Checkpoint c;
  c.stores.emplace_back("generator", state.generator.params);
  c.stores.emplace_back("discriminator", state.discriminator.params);
  c.stores.emplace_back("noise", state.noise.params);
  c.stores.emplace_back("adam_g.m", moments_store(state.generator.params, state.adam_g.m));
  c.stores.emplace_back("adam_g.v", moments_store(state.generator.params, state.adam_g.v));
  c.stores.emplace_back("adam_d.m", moments_store(state.discriminator.params, state.adam_d.m));
  c.stores.emplace_back("adam_d.v", moments_store(state.discriminator.params, state.adam_d.v));
  c.stores.emplace_back("adam_n.m", moments_store(state.noise.params, state.adam_n.m));
  c.stores.emplace_back("adam_n.v", moments_store(state.noise.params, state.adam_n.v));
  for (auto& entry : c.stores) entry.second.zero_grad();
  c.meta["iteration"] = state.iteration;
  c.meta["rng_generator"] = std::string(Rng::kGeneratorId);
  c.meta["rng"] = {{"data", state.rng.data.serialize()},
                   {"latent", state.rng.latent.serialize()},
                   {"noise", state.rng.noise.serialize()}};
  c.meta["adam_steps"] = {{"g", state.adam_g.step}, {"d", state.adam_d.step}, {"n", state.adam_n.step}};
  return c;
}

void restore_state(TrainState& state, const Checkpoint& ckpt) {
  for (const std::string& name : state_store_names()) find_store(ckpt, name);
  try {
    if (ckpt.meta.at("rng_generator") != Rng::kGeneratorId) {
      throw IoError("checkpoint was written with a different random generator");
    }
    TrainState next = state;
    copy_values(next.generator.params, find_store(ckpt, "generator"), "generator");
    copy_values(next.discriminator.params, find_store(ckpt, "discriminator"), "discriminator");
    copy_values(next.noise.params, find_store(ckpt, "noise"), "noise");
    copy_moments(next.adam_g.m, next.generator.params, find_store(ckpt, "adam_g.m"), "adam_g.m");
    copy_moments(next.adam_g.v, next.generator.params, find_store(ckpt, "adam_g.v"), "adam_g.v");
    copy_moments(next.adam_d.m, next.discriminator.params, find_store(ckpt, "adam_d.m"), "adam_d.m");
    copy_moments(next.adam_d.v, next.discriminator.params, find_store(ckpt, "adam_d.v"), "adam_d.v");
    copy_moments(next.adam_n.m, next.noise.params, find_store(ckpt, "adam_n.m"), "adam_n.m");
    copy_moments(next.adam_n.v, next.noise.params, find_store(ckpt, "adam_n.v"), "adam_n.v");
    const Json& steps = ckpt.meta.at("adam_steps");
    next.adam_g.step = steps.at("g").get<std::uint64_t>();
    next.adam_d.step = steps.at("d").get<std::uint64_t>();
    next.adam_n.step = steps.at("n").get<std::uint64_t>();
    const Json& rng = ckpt.meta.at("rng");
    next.rng.data.deserialize(rng.at("data").get<std::string>());
    next.rng.latent.deserialize(rng.at("latent").get<std::string>());
    next.rng.noise.deserialize(rng.at("noise").get<std::string>());
    next.iteration = ckpt.meta.at("iteration").get<std::size_t>();
    state = std::move(next);
  } catch (const Json::exception& e) {
    throw IoError(std::string("checkpoint metadata is incomplete: ") + e.what());
  }
}

}  // namespace dfgan
