// Tensor container (.lpqt): little-endian, self-describing, tagged records.
// Byte-level layout documented in docs/formats.md and pinned by tests.

#include <bit>
#include <cstring>
#include <fstream>

#include "lpq/io.hpp"

namespace lpq::io {
namespace {

constexpr char kMagic[4] = {'L', 'P', 'Q', 'T'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kLittleEndian = 1;

// ---- little-endian primitives ----------------------------------------------

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_i16(std::vector<uint8_t>& out, int16_t v) {
  put_u16(out, static_cast<uint16_t>(v));
}
void put_f32(std::vector<uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<uint32_t>(v));
}
void put_f64(std::vector<uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

struct Cursor {
  const uint8_t* p;
  size_t size;
  size_t off = 0;
  std::string ctx;

  const uint8_t* take(size_t n) {
    if (off + n > size)
      throw Error::schema("container truncated in " + ctx + " (need " +
                          std::to_string(n) + " bytes at offset " + std::to_string(off) +
                          ")");
    const uint8_t* q = p + off;
    off += n;
    return q;
  }
  uint8_t u8() { return *take(1); }
  uint16_t u16() {
    const uint8_t* q = take(2);
    return static_cast<uint16_t>(q[0] | (q[1] << 8));
  }
  uint32_t u32() {
    const uint8_t* q = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(q[i]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    const uint8_t* q = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(q[i]) << (8 * i);
    return v;
  }
  int16_t i16() { return static_cast<int16_t>(u16()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
};

// ---- bit packing (LSB-first within the stream) ------------------------------

size_t packed_bytes(uint64_t count, int bits) {
  return static_cast<size_t>((count * static_cast<uint64_t>(bits) + 7) / 8);
}

void pack_codes(std::vector<uint8_t>& out, const std::vector<int32_t>& codes, int bits) {
  const size_t base = out.size();
  out.resize(base + packed_bytes(codes.size(), bits), 0);
  const uint32_t mask = bits >= 32 ? ~0u : ((1u << bits) - 1u);
  uint64_t bitpos = 0;
  for (int32_t code : codes) {
    const uint32_t v = static_cast<uint32_t>(code) & mask;
    for (int b = 0; b < bits; ++b, ++bitpos)
      if ((v >> b) & 1u) out[base + (bitpos >> 3)] |= static_cast<uint8_t>(1u << (bitpos & 7));
  }
}

std::vector<int32_t> unpack_codes(Cursor& c, uint64_t count, int bits, bool is_signed) {
  const size_t nbytes = packed_bytes(count, bits);
  const uint8_t* q = c.take(nbytes);
  std::vector<int32_t> codes(static_cast<size_t>(count));
  const uint32_t mask = bits >= 32 ? ~0u : ((1u << bits) - 1u);
  uint64_t bitpos = 0;
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t v = 0;
    for (int b = 0; b < bits; ++b, ++bitpos)
      if (q[bitpos >> 3] & (1u << (bitpos & 7))) v |= (1u << b);
    if (is_signed && bits < 32 && (v >> (bits - 1)) & 1u) v |= ~mask;  // sign extend
    codes[static_cast<size_t>(i)] = static_cast<int32_t>(v);
  }
  return codes;
}

void check_tag_params(const TensorRecord& r) {
  auto bad = [&](const std::string& what) {
    throw Error::schema("record '" + r.name + "': " + what);
  };
  if (r.tag == 1 || r.tag == 2) {
    const int bw = r.tag == 1 ? r.fixed.bw : r.bw;
    if (bw < 1 || bw > 32) bad("bit width out of 1..32");
  }
  if (r.tag == 1 && (r.fixed.fl < -64 || r.fixed.fl > 64)) bad("fl out of range");
  if (r.tag == 2) {
    if (r.fixed.bw < 1 || r.fixed.bw > 32) bad("table bit width out of 1..32");
    if (r.center_codes.empty()) bad("empty center table");
    if (r.center_codes.size() != 1 &&
        r.center_codes.size() != (uint64_t{1} << r.bw))
      bad("center table size does not match bit width");
  }
}

}  // namespace

Tensor TensorRecord::to_tensor() const {
  const int64_t n = shape_numel(shape);
  std::vector<float> data(static_cast<size_t>(n));
  switch (tag) {
    case 0:
      data = floats;
      break;
    case 1:
      for (int64_t i = 0; i < n; ++i)
        data[static_cast<size_t>(i)] = dequantize_fixed(codes[static_cast<size_t>(i)], fixed);
      break;
    case 2: {
      std::vector<float> centers(center_codes.size());
      for (size_t i = 0; i < center_codes.size(); ++i)
        centers[i] = dequantize_fixed(center_codes[i], fixed);
      for (int64_t i = 0; i < n; ++i) {
        const int32_t j = codes[static_cast<size_t>(i)];
        if (j < 0 || static_cast<size_t>(j) >= centers.size())
          throw Error::schema("record '" + name + "': index out of table range");
        data[static_cast<size_t>(i)] = centers[static_cast<size_t>(j)];
      }
      break;
    }
    default:
      throw Error::schema("record '" + name + "': unknown tag");
  }
  return Tensor(shape, std::move(data));
}

void write_container(const std::filesystem::path& path,
                     const std::vector<TensorRecord>& records) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u8(out, kLittleEndian);
  put_u32(out, static_cast<uint32_t>(records.size()));

  for (const TensorRecord& r : records) {
    check_tag_params(r);
    const uint64_t n = static_cast<uint64_t>(shape_numel(r.shape));
    put_u16(out, static_cast<uint16_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    put_u8(out, r.tag);
    put_u8(out, static_cast<uint8_t>(r.shape.size()));
    for (int64_t d : r.shape) put_u32(out, static_cast<uint32_t>(d));

    std::vector<uint8_t> payload;
    switch (r.tag) {
      case 0:
        if (r.floats.size() != n)
          throw Error::schema("record '" + r.name + "': float payload length mismatch");
        for (float v : r.floats) put_f32(payload, v);
        break;
      case 1:
        if (r.codes.size() != n)
          throw Error::schema("record '" + r.name + "': code payload length mismatch");
        put_u8(payload, static_cast<uint8_t>(r.fixed.bw));
        put_i16(payload, static_cast<int16_t>(r.fixed.il));
        put_i16(payload, static_cast<int16_t>(r.fixed.fl));
        pack_codes(payload, r.codes, r.fixed.bw);
        break;
      case 2:
        if (r.codes.size() != n)
          throw Error::schema("record '" + r.name + "': index payload length mismatch");
        put_u8(payload, static_cast<uint8_t>(r.bw));
        put_u8(payload, static_cast<uint8_t>(r.fixed.bw));
        put_i16(payload, static_cast<int16_t>(r.fixed.il));
        put_i16(payload, static_cast<int16_t>(r.fixed.fl));
        put_f64(payload, r.lo);
        put_f64(payload, r.hi);
        put_u8(payload, r.kind == KMeansKind::Linear ? 0 : 1);
        put_u32(payload, static_cast<uint32_t>(r.center_codes.size()));
        pack_codes(payload, r.center_codes, r.fixed.bw);
        pack_codes(payload, r.codes, r.bw);
        break;
      default:
        throw Error::schema("record '" + r.name + "': unknown tag");
    }
    put_u64(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
  }

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error::io("cannot open '" + tmp + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw Error::io("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<TensorRecord> read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error::io("cannot open '" + path.string() + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  Cursor c{bytes.data(), bytes.size(), 0, "header"};

  const uint8_t* magic = c.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error::schema("'" + path.string() + "' is not a tensor container (bad magic)");
  const uint32_t version = c.u32();
  if (version != kVersion)
    throw Error::schema("unsupported container version " + std::to_string(version));
  if (c.u8() != kLittleEndian)
    throw Error::schema("unsupported container endianness");
  const uint32_t count = c.u32();

  std::vector<TensorRecord> records;
  records.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    c.ctx = "record " + std::to_string(i);
    TensorRecord r;
    const uint16_t name_len = c.u16();
    const uint8_t* name = c.take(name_len);
    r.name.assign(reinterpret_cast<const char*>(name), name_len);
    c.ctx = "record '" + r.name + "'";
    r.tag = c.u8();
    const uint8_t ndim = c.u8();
    if (ndim < 1 || ndim > 4)
      throw Error::schema(c.ctx + ": tensor order must be 1..4");
    uint64_t n = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      const uint32_t e = c.u32();
      if (e == 0 || e > (1u << 24)) throw Error::schema(c.ctx + ": bad extent");
      n *= e;
      if (n > (uint64_t{1} << 32)) throw Error::schema(c.ctx + ": tensor too large");
      r.shape.push_back(static_cast<int64_t>(e));
    }
    const uint64_t payload_len = c.u64();
    if (payload_len > c.size - c.off)
      throw Error::schema(c.ctx + ": payload length exceeds file size");
    const size_t payload_end = c.off + static_cast<size_t>(payload_len);

    switch (r.tag) {
      case 0: {
        if (payload_len != n * 4)
          throw Error::schema(c.ctx + ": float payload length mismatch");
        r.floats.resize(static_cast<size_t>(n));
        for (uint64_t j = 0; j < n; ++j) r.floats[static_cast<size_t>(j)] = c.f32();
        break;
      }
      case 1: {
        r.fixed.bw = c.u8();
        r.fixed.il = c.i16();
        r.fixed.fl = c.i16();
        check_tag_params(r);
        r.codes = unpack_codes(c, n, r.fixed.bw, /*is_signed=*/true);
        break;
      }
      case 2: {
        r.bw = c.u8();
        r.fixed.bw = c.u8();
        r.fixed.il = c.i16();
        r.fixed.fl = c.i16();
        r.lo = c.f64();
        r.hi = c.f64();
        const uint8_t kind = c.u8();
        if (kind > 1) throw Error::schema(c.ctx + ": bad distribution kind");
        r.kind = kind == 0 ? KMeansKind::Linear : KMeansKind::Gaussian;
        const uint32_t k = c.u32();
        if (k == 0 || k > (1u << 16)) throw Error::schema(c.ctx + ": bad table size");
        r.center_codes.resize(k);
        check_tag_params(r);
        r.center_codes = unpack_codes(c, k, r.fixed.bw, /*is_signed=*/true);
        r.codes = unpack_codes(c, n, r.bw, /*is_signed=*/false);
        break;
      }
      default:
        throw Error::schema(c.ctx + ": unknown record tag " + std::to_string(r.tag));
    }
    if (c.off != payload_end)
      throw Error::schema(c.ctx + ": payload length mismatch");
    records.push_back(std::move(r));
  }
  if (c.off != c.size) throw Error::schema("trailing bytes after last record");
  return records;
}

uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error::io("cannot open '" + path.string() + "'");
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<uint8_t>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace lpq::io
