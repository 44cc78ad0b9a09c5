#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scg/crypto.hpp"
#include "scg/message.hpp"
#include "scg/timeutil.hpp"

namespace scg::store {

enum class RecordStatus { Pending, InFlight, Acked, Quarantined };

const char* to_string(RecordStatus s);

struct SecurityLogEntry {
    std::uint64_t seq = 0;
    int severity = 6;
    std::string event;
    UtcMillis ts = 0;
    std::array<std::uint8_t, 32> prev_digest{};
    std::array<std::uint8_t, 32> digest{};
};

struct RecoveryReport {
    std::size_t restored = 0;    // in_flight records reset to pending
    std::size_t pending = 0;     // pending after recovery
    std::size_t quarantined = 0; // structurally corrupt records found
};

struct DequeueResult {
    std::vector<std::pair<std::string, Message>> items;
    std::vector<std::string> integrity_failures; // record ids that failed authentication
};

struct VerifyResult {
    bool ok = true;
    std::optional<std::uint64_t> first_bad_seq;
};

struct QueueCounts {
    std::size_t pending = 0;
    std::size_t in_flight = 0;
    std::size_t acked = 0;
    std::size_t quarantined = 0;
};

// Encrypted store-and-forward queue plus hash-chained security log, backed by
// three append-only files under one data directory. Every record and log
// entry is AEAD-sealed; writes are flushed to disk before the call returns.
class SecureStore {
public:
    // Opens (creating if needed) the store. `key` is a 32-byte storage key;
    // queue and log use domain-separated subkeys of it.
    SecureStore(const std::filesystem::path& dir, crypto::Bytes key);
    ~SecureStore();

    SecureStore(const SecureStore&) = delete;
    SecureStore& operator=(const SecureStore&) = delete;

    // Resets in_flight records to pending. Call once at startup before any
    // enqueue/dequeue.
    RecoveryReport recover();

    std::string enqueue(const Message& msg);
    DequeueResult dequeue_batch(std::size_t n);
    void ack(const std::string& id);
    // in_flight -> pending, for forwarding failures.
    void requeue(const std::string& id);
    std::size_t purge_acked(std::int64_t retention_ms,
                            std::optional<UtcMillis> now = std::nullopt);

    SecurityLogEntry append_log(int severity, const std::string& event,
                                std::optional<UtcMillis> ts = std::nullopt);
    VerifyResult verify_log();

    QueueCounts counts();
    std::size_t pending_count();

    // Read-only verification pass usable without the queue side (CLI).
    static VerifyResult verify_log_file(const std::filesystem::path& dir,
                                        const crypto::Bytes& key);

private:
    struct RecordMeta {
        std::string id;
        std::string kind;
        std::string device;
        UtcMillis enqueued_at = 0;
        std::array<std::uint8_t, crypto::kAeadNonceSize> nonce{};
        crypto::Bytes ciphertext;
        RecordStatus status = RecordStatus::Pending;
        UtcMillis acked_at = 0;
        std::uint64_t order = 0; // append order
    };

    void load();
    void append_record_line(const std::string& line);
    void append_status_line(const std::string& id, RecordStatus status, UtcMillis ts);
    std::array<std::uint8_t, crypto::kAeadNonceSize> next_nonce();
    void persist_counters();
    void compact_locked(const std::vector<std::string>& drop_ids);

    std::filesystem::path dir_;
    crypto::Bytes queue_key_;
    crypto::Bytes log_key_;

    std::mutex mutex_;
    std::map<std::string, RecordMeta> records_;
    std::vector<std::string> order_; // ids in append order (may contain purged ids)
    std::uint64_t next_order_ = 0;
    std::size_t corrupt_lines_ = 0;

    std::FILE* records_file_ = nullptr;
    std::FILE* status_file_ = nullptr;
    std::FILE* seclog_file_ = nullptr;

    std::uint64_t nonce_counter_ = 0;
    std::uint64_t nonce_reserved_ = 0;
    std::uint64_t seclog_count_ = 0; // persisted expected-seq counter
    std::array<std::uint8_t, 32> last_digest_{};
};

} // namespace scg::store
