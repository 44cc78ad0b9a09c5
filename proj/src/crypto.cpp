#include "scg/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>
#include <sodium.h>

#include <memory>

#include "scg/errors.hpp"

namespace scg::crypto {

namespace {

struct SodiumInit {
    SodiumInit() {
        if (sodium_init() < 0) throw Error(ErrorCode::IoError, "libsodium init failed");
    }
};

void ensure_sodium() {
    static SodiumInit init;
}

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

} // namespace

std::string to_hex(const std::uint8_t* data, std::size_t size) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(size * 2);
    for (std::size_t i = 0; i < size; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0x0f]);
    }
    return out;
}

std::string to_hex(const Bytes& data) {
    return to_hex(data.data(), data.size());
}

Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::ParseError, "non-hex character");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

Bytes random_bytes(std::size_t n) {
    ensure_sodium();
    Bytes out(n);
    randombytes_buf(out.data(), out.size());
    return out;
}

std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t size) {
    std::array<std::uint8_t, 32> digest{};
    SHA256(data, size, digest.data());
    return digest;
}

std::array<std::uint8_t, 32> sha256(const std::string& data) {
    return sha256(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

std::array<std::uint8_t, 32> hmac_sha256(const Bytes& key, const std::string& data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
         reinterpret_cast<const unsigned char*>(data.data()), data.size(), out.data(), &len);
    return out;
}

bool constant_time_equal(const Bytes& a, const Bytes& b) {
    ensure_sodium();
    if (a.size() != b.size()) return false;
    return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

Bytes aead_seal(const Bytes& key, const std::array<std::uint8_t, kAeadNonceSize>& nonce,
                const std::string& plaintext, const std::string& associated_data) {
    if (key.size() != kAeadKeySize)
        throw Error(ErrorCode::ValidationError, "AEAD key must be 32 bytes");
    CipherCtx ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                   nonce.data()) != 1)
        throw Error(ErrorCode::IoError, "AEAD init failed");
    int len = 0;
    if (!associated_data.empty() &&
        EVP_EncryptUpdate(ctx.get(), nullptr, &len,
                          reinterpret_cast<const unsigned char*>(associated_data.data()),
                          static_cast<int>(associated_data.size())) != 1)
        throw Error(ErrorCode::IoError, "AEAD aad failed");
    Bytes out(plaintext.size() + kAeadTagSize);
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len,
                          reinterpret_cast<const unsigned char*>(plaintext.data()),
                          static_cast<int>(plaintext.size())) != 1)
        throw Error(ErrorCode::IoError, "AEAD encrypt failed");
    int total = len;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1)
        throw Error(ErrorCode::IoError, "AEAD finalize failed");
    total += len;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                            out.data() + total) != 1)
        throw Error(ErrorCode::IoError, "AEAD tag failed");
    out.resize(total + kAeadTagSize);
    return out;
}

std::string aead_open(const Bytes& key, const std::array<std::uint8_t, kAeadNonceSize>& nonce,
                      const Bytes& ciphertext, const std::string& associated_data) {
    if (key.size() != kAeadKeySize)
        throw Error(ErrorCode::ValidationError, "AEAD key must be 32 bytes");
    if (ciphertext.size() < kAeadTagSize)
        throw Error(ErrorCode::IntegrityError, "ciphertext shorter than tag");
    CipherCtx ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                   nonce.data()) != 1)
        throw Error(ErrorCode::IoError, "AEAD init failed");
    int len = 0;
    if (!associated_data.empty() &&
        EVP_DecryptUpdate(ctx.get(), nullptr, &len,
                          reinterpret_cast<const unsigned char*>(associated_data.data()),
                          static_cast<int>(associated_data.size())) != 1)
        throw Error(ErrorCode::IoError, "AEAD aad failed");
    std::size_t ct_len = ciphertext.size() - kAeadTagSize;
    std::string plaintext(ct_len, '\0');
    if (ct_len > 0 &&
        EVP_DecryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(plaintext.data()), &len,
                          ciphertext.data(), static_cast<int>(ct_len)) != 1)
        throw Error(ErrorCode::IntegrityError, "AEAD decrypt failed");
    Bytes tag(ciphertext.end() - kAeadTagSize, ciphertext.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagSize, tag.data()) != 1)
        throw Error(ErrorCode::IoError, "AEAD tag set failed");
    unsigned char dummy[16];
    if (EVP_DecryptFinal_ex(ctx.get(), dummy, &len) != 1)
        throw Error(ErrorCode::IntegrityError, "AEAD authentication failed");
    return plaintext;
}

Bytes derive_key(const Bytes& master_secret, const KdfParams& params) {
    ensure_sodium();
    if (params.output_bits < 128)
        throw Error(ErrorCode::ParamsTooWeak,
                    "KDF output must be at least 128 bits, got " +
                        std::to_string(params.output_bits));
    if (master_secret.empty())
        throw Error(ErrorCode::ValidationError, "master secret must be non-empty");
    if (params.salt.size() != crypto_pwhash_argon2id_SALTBYTES)
        throw Error(ErrorCode::ValidationError, "salt must be 16 bytes");
    if (params.output_bits % 8 != 0)
        throw Error(ErrorCode::ValidationError, "output_bits must be a multiple of 8");
    if (params.parallelism != 1)
        throw Error(ErrorCode::ValidationError, "only a single KDF lane is supported");
    if (params.time_cost < 1 || params.memory_cost < 8 * params.parallelism)
        throw Error(ErrorCode::ValidationError, "KDF cost parameters out of range");
    Bytes out(params.output_bits / 8);
    std::size_t memlimit = static_cast<std::size_t>(params.memory_cost) * 1024;
    if (crypto_pwhash_argon2id(
            out.data(), out.size(), reinterpret_cast<const char*>(master_secret.data()),
            master_secret.size(), params.salt.data(), params.time_cost, memlimit,
            crypto_pwhash_argon2id_ALG_ARGON2ID13) != 0)
        throw Error(ErrorCode::IoError, "KDF failed (out of memory?)");
    return out;
}

Bytes derive_subkey(const Bytes& key, const std::string& context) {
    auto mac = hmac_sha256(key, context);
    return Bytes(mac.begin(), mac.end());
}

} // namespace scg::crypto
