#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "domac/diffcore.hpp"

namespace domac {

/// File layout, little-endian:
///   8 bytes   magic "DOMACCK1"
///   u64       payload length
///   payload
///   u32       CRC-32 of the payload
inline constexpr std::string_view kCheckpointMagic = "DOMACCK1";

void write_checkpoint_file(const std::filesystem::path& path, const std::string& payload);
/// Throws CheckpointError on a wrong magic, a short file or a checksum mismatch.
std::string read_checkpoint_file(const std::filesystem::path& path);

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v);
    void str(std::string_view s);
    void vec(const VectorXd& v);
    void block(const ParamBlock& b);
    void adam(const AdamState& s);

    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64();
    std::string str();
    VectorXd vec();
    ParamBlock block();
    AdamState adam();

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view take(std::size_t n);

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

/// Overwrites `into` with a stored block after checking name and shape.
void restore_block(ParamBlock& into, const ParamBlock& stored);

}  // namespace domac
