#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace scg::crypto {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(const std::uint8_t* data, std::size_t size);
std::string to_hex(const Bytes& data);
Bytes from_hex(const std::string& hex); // throws ParseError on odd length / non-hex

Bytes random_bytes(std::size_t n);

std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t size);
std::array<std::uint8_t, 32> sha256(const std::string& data);

std::array<std::uint8_t, 32> hmac_sha256(const Bytes& key, const std::string& data);

bool constant_time_equal(const Bytes& a, const Bytes& b);

inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;
inline constexpr std::size_t kAeadKeySize = 32; // AES-256-GCM

// ciphertext || 16-byte tag
Bytes aead_seal(const Bytes& key, const std::array<std::uint8_t, kAeadNonceSize>& nonce,
                const std::string& plaintext, const std::string& associated_data);

// Throws Error{IntegrityError} on authentication failure.
std::string aead_open(const Bytes& key, const std::array<std::uint8_t, kAeadNonceSize>& nonce,
                      const Bytes& ciphertext, const std::string& associated_data);

struct KdfParams {
    Bytes salt;                 // 16 bytes
    std::uint32_t memory_cost = 64 * 1024; // KiB
    std::uint32_t time_cost = 3;           // iterations
    std::uint32_t parallelism = 1;         // lanes
    std::uint32_t output_bits = 256;
};

// Memory-hard password hashing (Argon2id). Deterministic for fixed inputs.
// Throws Error{ParamsTooWeak} when output_bits < 128 and
// Error{ValidationError} on otherwise unusable parameters.
Bytes derive_key(const Bytes& master_secret, const KdfParams& params);

// Cheap domain-separated subkey from an already-derived key.
Bytes derive_subkey(const Bytes& key, const std::string& context);

} // namespace scg::crypto
