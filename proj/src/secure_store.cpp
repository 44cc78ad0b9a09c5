#include "scg/secure_store.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "scg/errors.hpp"

namespace scg::store {

using nlohmann::json;
using crypto::Bytes;

namespace {

constexpr const char* kRecordsMagic = "SCGR1";
constexpr const char* kStatusMagic = "SCGS1";
constexpr const char* kSeclogMagic = "SCGL1";

void fsync_file(std::FILE* f) {
    if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0)
        throw Error(ErrorCode::IoError, "flush to disk failed");
}

std::FILE* open_append(const std::filesystem::path& path, const char* magic) {
    bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    if (fresh) {
        std::fputs(magic, f);
        std::fputc('\n', f);
        fsync_file(f);
    }
    return f;
}

std::vector<std::string> read_lines(const std::filesystem::path& path, const char* magic) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    if (!in) return lines;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            if (line != magic)
                throw Error(ErrorCode::IntegrityError,
                            "bad magic header in " + path.filename().string());
            first = false;
            continue;
        }
        lines.push_back(line);
    }
    return lines;
}

// Associated data binds every plaintext metadata field of a queue record, so
// any single-byte change to the stored line fails authentication.
std::string record_aad(const std::string& id, const std::string& kind, const std::string& device,
                       UtcMillis enqueued_at, const std::string& nonce_hex) {
    json aad = json::object();
    aad["device"] = device;
    aad["enqueued_at"] = format_rfc3339(enqueued_at);
    aad["id"] = id;
    aad["kind"] = kind;
    aad["nonce"] = nonce_hex;
    return aad.dump();
}

std::string chain_input(std::uint64_t seq, int severity, const std::string& event, UtcMillis ts) {
    json obj = json::object();
    obj["event"] = event;
    obj["seq"] = seq;
    obj["severity"] = severity;
    obj["ts"] = format_rfc3339(ts);
    return obj.dump();
}

std::array<std::uint8_t, 32> chain_digest(const std::array<std::uint8_t, 32>& prev,
                                          const std::string& canonical) {
    std::string input(prev.begin(), prev.end());
    input += canonical;
    return crypto::sha256(input);
}

struct SeclogWalk {
    VerifyResult result;
    std::uint64_t count = 0;
    std::array<std::uint8_t, 32> last_digest{};
};

SeclogWalk walk_seclog(const std::filesystem::path& path, const Bytes& log_key) {
    SeclogWalk walk;
    std::vector<std::string> lines;
    try {
        lines = read_lines(path, kSeclogMagic);
    } catch (const Error&) {
        walk.result = {false, 1};
        return walk;
    }
    std::array<std::uint8_t, 32> prev{};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::uint64_t seq = i + 1;
        auto bad = [&] {
            walk.result = {false, seq};
            return walk;
        };
        json outer = json::parse(lines[i], nullptr, false);
        if (outer.is_discarded() || !outer.is_object()) return bad();
        try {
            if (outer.at("seq").get<std::uint64_t>() != seq) return bad();
            Bytes nonce_bytes = crypto::from_hex(outer.at("nonce").get<std::string>());
            if (nonce_bytes.size() != crypto::kAeadNonceSize) return bad();
            std::array<std::uint8_t, crypto::kAeadNonceSize> nonce{};
            std::copy(nonce_bytes.begin(), nonce_bytes.end(), nonce.begin());
            Bytes ct = crypto::from_hex(outer.at("ct").get<std::string>());
            std::string plain =
                crypto::aead_open(log_key, nonce, ct, "seclog:" + std::to_string(seq));
            json inner = json::parse(plain, nullptr, false);
            if (inner.is_discarded()) return bad();
            if (inner.at("seq").get<std::uint64_t>() != seq) return bad();
            int severity = inner.at("severity").get<int>();
            if (severity < 0 || severity > 7) return bad();
            Bytes stored_prev = crypto::from_hex(inner.at("prev").get<std::string>());
            if (stored_prev.size() != 32 ||
                !std::equal(stored_prev.begin(), stored_prev.end(), prev.begin()))
                return bad();
            std::string canonical =
                chain_input(seq, severity, inner.at("event").get<std::string>(),
                            parse_rfc3339(inner.at("ts").get<std::string>()));
            auto digest = chain_digest(prev, canonical);
            Bytes stored_digest = crypto::from_hex(inner.at("digest").get<std::string>());
            if (stored_digest.size() != 32 ||
                !std::equal(stored_digest.begin(), stored_digest.end(), digest.begin()))
                return bad();
            prev = digest;
        } catch (const json::exception&) {
            return bad();
        } catch (const Error&) {
            return bad();
        }
    }
    walk.count = lines.size();
    walk.last_digest = prev;
    return walk;
}

std::uint64_t read_counter(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_unsigned()) return 0;
    return it->get<std::uint64_t>();
}

} // namespace

const char* to_string(RecordStatus s) {
    switch (s) {
    case RecordStatus::Pending: return "pending";
    case RecordStatus::InFlight: return "in_flight";
    case RecordStatus::Acked: return "acked";
    case RecordStatus::Quarantined: return "quarantined";
    }
    return "?";
}

SecureStore::SecureStore(const std::filesystem::path& dir, Bytes key) : dir_(dir) {
    if (key.size() != crypto::kAeadKeySize)
        throw Error(ErrorCode::ValidationError, "storage key must be 32 bytes");
    queue_key_ = crypto::derive_subkey(key, "scg:queue");
    log_key_ = crypto::derive_subkey(key, "scg:seclog");
    std::filesystem::create_directories(dir_);
    load();
    records_file_ = open_append(dir_ / "records.log", kRecordsMagic);
    status_file_ = open_append(dir_ / "status.log", kStatusMagic);
    seclog_file_ = open_append(dir_ / "seclog.log", kSeclogMagic);
}

SecureStore::~SecureStore() {
    if (records_file_) std::fclose(records_file_);
    if (status_file_) std::fclose(status_file_);
    if (seclog_file_) std::fclose(seclog_file_);
}

void SecureStore::load() {
    // Counters first: nonce high-water and expected security-log length.
    std::ifstream cf(dir_ / "counters.json");
    if (cf) {
        json obj = json::parse(cf, nullptr, false);
        if (!obj.is_discarded() && obj.is_object()) {
            nonce_reserved_ = read_counter(obj, "nonce_reserved");
            seclog_count_ = read_counter(obj, "seclog_count");
        }
    }
    nonce_counter_ = nonce_reserved_;

    std::uint64_t corrupt_seq = 0;
    for (const std::string& line : read_lines(dir_ / "records.log", kRecordsMagic)) {
        auto quarantine_line = [&] {
            ++corrupt_lines_;
            RecordMeta meta;
            meta.id = "!corrupt:" + std::to_string(++corrupt_seq);
            meta.status = RecordStatus::Quarantined;
            meta.order = next_order_++;
            order_.push_back(meta.id);
            records_.emplace(meta.id, std::move(meta));
        };
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            quarantine_line();
            continue;
        }
        try {
            RecordMeta meta;
            meta.id = obj.at("id").get<std::string>();
            meta.kind = obj.at("kind").get<std::string>();
            meta.device = obj.at("device").get<std::string>();
            meta.enqueued_at = parse_rfc3339(obj.at("enqueued_at").get<std::string>());
            Bytes nonce = crypto::from_hex(obj.at("nonce").get<std::string>());
            if (nonce.size() != crypto::kAeadNonceSize) {
                quarantine_line();
                continue;
            }
            std::copy(nonce.begin(), nonce.end(), meta.nonce.begin());
            meta.ciphertext = crypto::from_hex(obj.at("ct").get<std::string>());
            meta.order = next_order_++;
            if (records_.count(meta.id)) {
                quarantine_line(); // duplicate line: ambiguous, quarantine
                continue;
            }
            order_.push_back(meta.id);
            records_.emplace(meta.id, std::move(meta));
        } catch (const json::exception&) {
            quarantine_line();
        } catch (const Error&) {
            quarantine_line();
        }
    }

    for (const std::string& line : read_lines(dir_ / "status.log", kStatusMagic)) {
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) continue;
        auto it = records_.find(obj.value("id", ""));
        if (it == records_.end()) continue;
        std::string status = obj.value("status", "");
        if (status == "in_flight")
            it->second.status = RecordStatus::InFlight;
        else if (status == "acked") {
            it->second.status = RecordStatus::Acked;
            try {
                it->second.acked_at = parse_rfc3339(obj.value("ts", ""));
            } catch (const Error&) {
                it->second.acked_at = 0;
            }
        } else if (status == "quarantined")
            it->second.status = RecordStatus::Quarantined;
        else if (status == "pending")
            it->second.status = RecordStatus::Pending;
    }

    // Pick up the chain tail so new log entries extend it. A corrupt chain
    // surfaces at open time rather than poisoning later appends.
    auto walk = walk_seclog(dir_ / "seclog.log", log_key_);
    if (!walk.result.ok)
        throw Error(ErrorCode::IntegrityError,
                    "security log verification failed at seq " +
                        std::to_string(*walk.result.first_bad_seq));
    if (walk.count < seclog_count_)
        throw Error(ErrorCode::IntegrityError, "security log truncated");
    seclog_count_ = walk.count;
    last_digest_ = walk.last_digest;
}

void SecureStore::append_record_line(const std::string& line) {
    std::fputs(line.c_str(), records_file_);
    std::fputc('\n', records_file_);
    fsync_file(records_file_);
}

void SecureStore::append_status_line(const std::string& id, RecordStatus status, UtcMillis ts) {
    json obj = json::object();
    obj["id"] = id;
    obj["status"] = to_string(status);
    obj["ts"] = format_rfc3339(ts);
    std::string line = obj.dump();
    std::fputs(line.c_str(), status_file_);
    std::fputc('\n', status_file_);
    fsync_file(status_file_);
}

std::array<std::uint8_t, crypto::kAeadNonceSize> SecureStore::next_nonce() {
    if (nonce_counter_ >= nonce_reserved_) {
        nonce_reserved_ = nonce_counter_ + 1024;
        persist_counters();
    }
    std::uint64_t value = nonce_counter_++;
    std::array<std::uint8_t, crypto::kAeadNonceSize> nonce{};
    for (int i = 0; i < 8; ++i)
        nonce[11 - i] = static_cast<std::uint8_t>((value >> (8 * i)) & 0xff);
    return nonce;
}

void SecureStore::persist_counters() {
    json obj = json::object();
    obj["nonce_reserved"] = nonce_reserved_;
    obj["seclog_count"] = seclog_count_;
    auto tmp = dir_ / "counters.json.tmp";
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw Error(ErrorCode::IoError, "cannot write counters");
        std::string text = obj.dump();
        std::fputs(text.c_str(), f);
        fsync_file(f);
        std::fclose(f);
    }
    std::filesystem::rename(tmp, dir_ / "counters.json");
}

RecoveryReport SecureStore::recover() {
    std::lock_guard lock(mutex_);
    RecoveryReport report;
    for (auto& [id, meta] : records_) {
        switch (meta.status) {
        case RecordStatus::InFlight:
            meta.status = RecordStatus::Pending;
            append_status_line(id, RecordStatus::Pending, now_utc_millis());
            ++report.restored;
            ++report.pending;
            break;
        case RecordStatus::Pending: ++report.pending; break;
        case RecordStatus::Quarantined: ++report.quarantined; break;
        case RecordStatus::Acked: break;
        }
    }
    return report;
}

std::string SecureStore::enqueue(const Message& msg) {
    validate_message(msg);
    std::lock_guard lock(mutex_);
    if (records_.count(msg.id))
        throw Error(ErrorCode::DuplicateMessage, msg.id);

    RecordMeta meta;
    meta.id = msg.id;
    meta.kind = to_string(msg.kind);
    meta.device = msg.device;
    meta.enqueued_at = now_utc_millis();
    meta.nonce = next_nonce();
    std::string nonce_hex = crypto::to_hex(meta.nonce.data(), meta.nonce.size());
    std::string aad = record_aad(meta.id, meta.kind, meta.device, meta.enqueued_at, nonce_hex);
    meta.ciphertext = crypto::aead_seal(queue_key_, meta.nonce, canonical_encode(msg), aad);
    meta.order = next_order_++;

    json line = json::object();
    line["ct"] = crypto::to_hex(meta.ciphertext);
    line["device"] = meta.device;
    line["enqueued_at"] = format_rfc3339(meta.enqueued_at);
    line["id"] = meta.id;
    line["kind"] = meta.kind;
    line["nonce"] = nonce_hex;
    append_record_line(line.dump());

    order_.push_back(meta.id);
    records_.emplace(msg.id, std::move(meta));
    return msg.id;
}

DequeueResult SecureStore::dequeue_batch(std::size_t n) {
    if (n < 1) throw Error(ErrorCode::ValidationError, "batch size must be >= 1");
    std::lock_guard lock(mutex_);
    DequeueResult result;
    for (const std::string& id : order_) {
        if (result.items.size() >= n) break;
        auto it = records_.find(id);
        if (it == records_.end() || it->second.status != RecordStatus::Pending) continue;
        RecordMeta& meta = it->second;
        try {
            std::string nonce_hex = crypto::to_hex(meta.nonce.data(), meta.nonce.size());
            std::string aad =
                record_aad(meta.id, meta.kind, meta.device, meta.enqueued_at, nonce_hex);
            std::string plain = crypto::aead_open(queue_key_, meta.nonce, meta.ciphertext, aad);
            Message msg = canonical_decode(plain);
            meta.status = RecordStatus::InFlight;
            append_status_line(id, RecordStatus::InFlight, now_utc_millis());
            result.items.emplace_back(id, std::move(msg));
        } catch (const Error&) {
            meta.status = RecordStatus::Quarantined;
            append_status_line(id, RecordStatus::Quarantined, now_utc_millis());
            result.integrity_failures.push_back(id);
        }
    }
    return result;
}

void SecureStore::ack(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) throw Error(ErrorCode::UnknownMessage, id);
    RecordMeta& meta = it->second;
    if (meta.status == RecordStatus::Acked) return; // idempotent
    if (meta.status == RecordStatus::Quarantined)
        throw Error(ErrorCode::IntegrityError, "record quarantined: " + id);
    meta.status = RecordStatus::Acked;
    meta.acked_at = now_utc_millis();
    append_status_line(id, RecordStatus::Acked, meta.acked_at);
}

void SecureStore::requeue(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) throw Error(ErrorCode::UnknownMessage, id);
    if (it->second.status != RecordStatus::InFlight) return;
    it->second.status = RecordStatus::Pending;
    append_status_line(id, RecordStatus::Pending, now_utc_millis());
}

std::size_t SecureStore::purge_acked(std::int64_t retention_ms, std::optional<UtcMillis> now) {
    std::lock_guard lock(mutex_);
    UtcMillis cutoff_now = now.value_or(now_utc_millis());
    std::vector<std::string> drop;
    for (const auto& [id, meta] : records_) {
        if (meta.status == RecordStatus::Acked && meta.acked_at + retention_ms <= cutoff_now)
            drop.push_back(id);
    }
    if (!drop.empty()) compact_locked(drop);
    return drop.size();
}

void SecureStore::compact_locked(const std::vector<std::string>& drop_ids) {
    for (const std::string& id : drop_ids) records_.erase(id);

    auto records_tmp = dir_ / "records.log.tmp";
    auto status_tmp = dir_ / "status.log.tmp";
    {
        std::FILE* rf = std::fopen(records_tmp.c_str(), "wb");
        std::FILE* sf = std::fopen(status_tmp.c_str(), "wb");
        if (!rf || !sf) throw Error(ErrorCode::IoError, "compaction failed");
        std::fputs(kRecordsMagic, rf);
        std::fputc('\n', rf);
        std::fputs(kStatusMagic, sf);
        std::fputc('\n', sf);
        for (const std::string& id : order_) {
            auto it = records_.find(id);
            if (it == records_.end()) continue;
            const RecordMeta& meta = it->second;
            if (meta.id.rfind("!corrupt:", 0) == 0) continue; // unrecoverable lines dropped
            json line = json::object();
            line["ct"] = crypto::to_hex(meta.ciphertext);
            line["device"] = meta.device;
            line["enqueued_at"] = format_rfc3339(meta.enqueued_at);
            line["id"] = meta.id;
            line["kind"] = meta.kind;
            line["nonce"] = crypto::to_hex(meta.nonce.data(), meta.nonce.size());
            std::string text = line.dump();
            std::fputs(text.c_str(), rf);
            std::fputc('\n', rf);
            if (meta.status != RecordStatus::Pending) {
                json st = json::object();
                st["id"] = meta.id;
                st["status"] = to_string(meta.status);
                st["ts"] = format_rfc3339(meta.status == RecordStatus::Acked ? meta.acked_at
                                                                             : meta.enqueued_at);
                std::string st_text = st.dump();
                std::fputs(st_text.c_str(), sf);
                std::fputc('\n', sf);
            }
        }
        fsync_file(rf);
        fsync_file(sf);
        std::fclose(rf);
        std::fclose(sf);
    }
    std::fclose(records_file_);
    std::fclose(status_file_);
    std::filesystem::rename(records_tmp, dir_ / "records.log");
    std::filesystem::rename(status_tmp, dir_ / "status.log");
    records_file_ = open_append(dir_ / "records.log", kRecordsMagic);
    status_file_ = open_append(dir_ / "status.log", kStatusMagic);

    std::vector<std::string> new_order;
    for (const std::string& id : order_)
        if (records_.count(id)) new_order.push_back(id);
    order_ = std::move(new_order);
}

SecurityLogEntry SecureStore::append_log(int severity, const std::string& event,
                                         std::optional<UtcMillis> ts) {
    if (severity < 0 || severity > 7)
        throw Error(ErrorCode::ValidationError,
                    "severity must be 0..7, got " + std::to_string(severity));
    std::lock_guard lock(mutex_);
    SecurityLogEntry entry;
    entry.seq = seclog_count_ + 1;
    entry.severity = severity;
    entry.event = event;
    entry.ts = ts.value_or(now_utc_millis());
    entry.prev_digest = last_digest_;
    entry.digest =
        chain_digest(last_digest_, chain_input(entry.seq, severity, event, entry.ts));

    json inner = json::object();
    inner["digest"] = crypto::to_hex(entry.digest.data(), entry.digest.size());
    inner["event"] = event;
    inner["prev"] = crypto::to_hex(entry.prev_digest.data(), entry.prev_digest.size());
    inner["seq"] = entry.seq;
    inner["severity"] = severity;
    inner["ts"] = format_rfc3339(entry.ts);

    auto nonce = next_nonce();
    Bytes ct =
        crypto::aead_seal(log_key_, nonce, inner.dump(), "seclog:" + std::to_string(entry.seq));
    json outer = json::object();
    outer["ct"] = crypto::to_hex(ct);
    outer["nonce"] = crypto::to_hex(nonce.data(), nonce.size());
    outer["seq"] = entry.seq;
    std::string line = outer.dump();
    std::fputs(line.c_str(), seclog_file_);
    std::fputc('\n', seclog_file_);
    fsync_file(seclog_file_);

    seclog_count_ = entry.seq;
    last_digest_ = entry.digest;
    persist_counters();
    return entry;
}

VerifyResult SecureStore::verify_log() {
    std::lock_guard lock(mutex_);
    auto walk = walk_seclog(dir_ / "seclog.log", log_key_);
    if (!walk.result.ok) return walk.result;
    if (walk.count < seclog_count_) return {false, walk.count + 1};
    return {true, std::nullopt};
}

VerifyResult SecureStore::verify_log_file(const std::filesystem::path& dir,
                                          const Bytes& key) {
    Bytes log_key = crypto::derive_subkey(key, "scg:seclog");
    auto walk = walk_seclog(dir / "seclog.log", log_key);
    if (!walk.result.ok) return walk.result;
    std::uint64_t expected = 0;
    std::ifstream cf(dir / "counters.json");
    if (cf) {
        json obj = json::parse(cf, nullptr, false);
        if (!obj.is_discarded() && obj.is_object()) expected = read_counter(obj, "seclog_count");
    }
    if (walk.count < expected) return {false, walk.count + 1};
    return {true, std::nullopt};
}

QueueCounts SecureStore::counts() {
    std::lock_guard lock(mutex_);
    QueueCounts c;
    for (const auto& [id, meta] : records_) {
        switch (meta.status) {
        case RecordStatus::Pending: ++c.pending; break;
        case RecordStatus::InFlight: ++c.in_flight; break;
        case RecordStatus::Acked: ++c.acked; break;
        case RecordStatus::Quarantined: ++c.quarantined; break;
        }
    }
    return c;
}

std::size_t SecureStore::pending_count() {
    return counts().pending;
}

} // namespace scg::store
