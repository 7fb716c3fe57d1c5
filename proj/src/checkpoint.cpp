#include "domac/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

namespace domac {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

void write_checkpoint_file(const std::filesystem::path& path, const std::string& payload) {
    ByteWriter header;
    header.u64(payload.size());
    ByteWriter footer;
    footer.u32(crc32_of(payload));

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
        out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
        out.write(header.bytes().data(), static_cast<std::streamsize>(header.bytes().size()));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        out.write(footer.bytes().data(), static_cast<std::streamsize>(footer.bytes().size()));
        if (!out.flush()) throw CheckpointError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_checkpoint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string file = ss.str();

    if (file.size() < kCheckpointMagic.size() || file.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0) {
        if (file.size() >= 5 && file.compare(0, 5, "DOMAC") == 0)
            throw CheckpointError("unsupported checkpoint version in " + path.string());
        throw CheckpointError(path.string() + " is not a checkpoint");
    }
    ByteReader r(std::string_view(file).substr(kCheckpointMagic.size()));
    std::uint64_t length = 0;
    try {
        length = r.u64();
    } catch (const CheckpointError&) {
        throw CheckpointError("checkpoint truncated: " + path.string());
    }
    const std::size_t start = kCheckpointMagic.size() + 8;
    if (file.size() != start + length + 4)
        throw CheckpointError("checkpoint truncated or padded: " + path.string());
    std::string payload = file.substr(start, length);
    ByteReader tail(std::string_view(file).substr(start + length));
    if (tail.u32() != crc32_of(payload)) throw CheckpointError("checkpoint checksum mismatch: " + path.string());
    return payload;
}

void ByteWriter::u32(std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    bytes_.append(b, 4);
}

void ByteWriter::u64(std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    bytes_.append(b, 8);
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
    u64(s.size());
    bytes_.append(s);
}

void ByteWriter::vec(const VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
}

void ByteWriter::block(const ParamBlock& b) {
    str(b.name);
    u32(static_cast<std::uint32_t>(b.shape.size()));
    for (int d : b.shape) u32(static_cast<std::uint32_t>(d));
    vec(b.values);
}

void ByteWriter::adam(const AdamState& s) {
    i64(s.t);
    vec(s.m);
    vec(s.v);
}

std::string_view ByteReader::take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint payload ends early");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t ByteReader::u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
}

std::uint64_t ByteReader::u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8).data(), 8);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    const std::uint64_t n = u64();
    return std::string(take(n));
}

VectorXd ByteReader::vec() {
    const std::uint64_t n = u64();
    if (n > (bytes_.size() - pos_) / 8) throw CheckpointError("checkpoint payload ends early");
    VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
}

ParamBlock ByteReader::block() {
    ParamBlock b;
    b.name = str();
    const std::uint32_t rank = u32();
    if (rank < 1 || rank > 2) throw CheckpointError("checkpoint block '" + b.name + "' has invalid rank");
    for (std::uint32_t i = 0; i < rank; ++i) b.shape.push_back(static_cast<int>(u32()));
    b.values = vec();
    b.grads = VectorXd::Zero(b.values.size());
    return b;
}

AdamState ByteReader::adam() {
    AdamState s;
    s.t = i64();
    s.m = vec();
    s.v = vec();
    return s;
}

void restore_block(ParamBlock& into, const ParamBlock& stored) {
    if (into.name != stored.name || into.shape != stored.shape || into.size() != stored.size())
        throw CheckpointError("checkpoint block '" + stored.name + "' does not match '" + into.name + "'");
    into.values = stored.values;
    into.grads.setZero();
}

}  // namespace domac
