// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "veda/attnbench.hpp"
#include "veda/error.hpp"

namespace veda::attnbench {
namespace {

constexpr std::string_view kMagic = "VEDATRC1";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

std::uint32_t get_u32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw IoError("trace: truncated input");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(std::string_view in, std::size_t& pos) { return std::bit_cast<float>(get_u32(in, pos)); }

}  // namespace

std::string serialize_trace(const AttentionTrace& trace) {
  const auto& m = trace.meta();
  nlohmann::json header = {{"name", m.name},     {"kind", m.kind},   {"seed", m.seed},
                           {"layers", m.layers}, {"heads", m.heads}, {"steps", m.steps},
                           {"params", m.params}};
  const std::string text = header.dump();

  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + trace.raw().size() * 4 + m.steps * m.layers * m.heads * 4);
  for (std::size_t t = 1; t <= m.steps; ++t) {
    for (std::size_t l = 0; l < m.layers; ++l) {
      for (std::size_t h = 0; h < m.heads; ++h) {
        const auto row = trace.row(t, l, h);
        put_u32(out, static_cast<std::uint32_t>(row.size()));
        for (float x : row) put_f32(out, x);
      }
    }
  }
  return out;
}

AttentionTrace deserialize_trace(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw IoError("trace: bad magic");
  std::size_t pos = kMagic.size();
  const std::uint32_t header_len = get_u32(bytes, pos);
  if (pos + header_len > bytes.size()) throw IoError("trace: truncated header");

  AttentionTrace::Meta meta;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(pos, header_len));
    meta.name = header.at("name").get<std::string>();
    meta.kind = header.at("kind").get<std::string>();
    meta.seed = header.at("seed").get<std::uint64_t>();
    meta.layers = header.at("layers").get<std::size_t>();
    meta.heads = header.at("heads").get<std::size_t>();
    meta.steps = header.at("steps").get<std::size_t>();
    meta.params = header.at("params").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("trace: bad header: ") + e.what());
  }
  pos += header_len;

  AttentionTrace trace(std::move(meta));
  for (std::size_t t = 1; t <= trace.steps(); ++t) {
    for (std::size_t l = 0; l < trace.layers(); ++l) {
      for (std::size_t h = 0; h < trace.heads(); ++h) {
        if (get_u32(bytes, pos) != t) throw IoError("trace: row length mismatch at step " + std::to_string(t));
        for (float& x : trace.row(t, l, h)) x = get_f32(bytes, pos);
      }
    }
  }
  if (pos != bytes.size()) throw IoError("trace: trailing bytes");
  return trace;
}

void write_trace(const AttentionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = serialize_trace(trace);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

AttentionTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_trace(bytes);
}

}  // namespace veda::attnbench
