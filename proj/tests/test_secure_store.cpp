#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "scg/crypto.hpp"
#include "scg/errors.hpp"
#include "scg/message.hpp"
#include "scg/secure_store.hpp"

#include "oracles.hpp"

using namespace scg;
using namespace scg::store;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("scg-store-test-" + std::to_string(::getpid()) + "-" + generate_uuid_v4());
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

crypto::Bytes test_key() {
    return crypto::from_hex(
        "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
}

Message make_message(const std::string& device = "meter-1") {
    Message msg;
    msg.id = generate_uuid_v4();
    msg.kind = MessageKind::Measurement;
    msg.device = device;
    msg.ts = 1490011200000;
    msg.body["kWh"] = static_cast<std::int64_t>(7);
    return msg;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

} // namespace

TEST_CASE("kdf: deterministic, salted, floor enforced") {
    crypto::KdfParams params;
    params.salt = crypto::from_hex("00112233445566778899aabbccddeeff");
    params.memory_cost = 8 * 1024; // keep the test quick
    params.time_cost = 1;
    crypto::Bytes secret{'s', 'e', 'c', 'r', 'e', 't'};

    auto k1 = crypto::derive_key(secret, params);
    auto k2 = crypto::derive_key(secret, params);
    CHECK(k1 == k2);
    CHECK(k1.size() == 32);

    // 100 random salts, all-distinct outputs
    std::set<crypto::Bytes> keys;
    for (int i = 0; i < 100; ++i) {
        crypto::KdfParams p = params;
        p.salt = crypto::random_bytes(16);
        keys.insert(crypto::derive_key(secret, p));
    }
    CHECK(keys.size() == 100);

    crypto::KdfParams weak = params;
    weak.output_bits = 64;
    CHECK_THROWS_AS(crypto::derive_key(secret, weak), Error);
    try {
        crypto::derive_key(secret, weak);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParamsTooWeak);
    }
    weak.output_bits = 127;
    CHECK_THROWS_AS(crypto::derive_key(secret, weak), Error);
    weak.output_bits = 128;
    CHECK(crypto::derive_key(secret, weak).size() == 16);
}

TEST_CASE("subkeys are domain separated") {
    auto key = test_key();
    CHECK(crypto::derive_subkey(key, "scg:queue") != crypto::derive_subkey(key, "scg:seclog"));
    CHECK(crypto::derive_subkey(key, "scg:queue") == crypto::derive_subkey(key, "scg:queue"));
}

TEST_CASE("aead seal/open round trip and tamper detection") {
    auto key = test_key();
    std::array<std::uint8_t, crypto::kAeadNonceSize> nonce{};
    nonce[11] = 1;
    auto sealed = crypto::aead_seal(key, nonce, "hello", "aad");
    CHECK(crypto::aead_open(key, nonce, sealed, "aad") == "hello");
    auto tampered = sealed;
    tampered[0] ^= 1;
    CHECK_THROWS_AS(crypto::aead_open(key, nonce, tampered, "aad"), Error);
    CHECK_THROWS_AS(crypto::aead_open(key, nonce, sealed, "other-aad"), Error);
}

TEST_CASE("enqueue/dequeue basics: FIFO, counting, duplicates") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();

    CHECK(store.dequeue_batch(5).items.empty());

    Message m1 = make_message();
    Message m2 = make_message();
    store.enqueue(m1);
    store.enqueue(m2);
    CHECK_THROWS_AS(store.enqueue(m1), Error);
    try {
        store.enqueue(m1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateMessage);
    }

    auto batch = store.dequeue_batch(1);
    REQUIRE(batch.items.size() == 1);
    CHECK(batch.items[0].first == m1.id);
    CHECK(batch.items[0].second == m1);

    auto rest = store.dequeue_batch(10);
    REQUIRE(rest.items.size() == 1);
    CHECK(rest.items[0].first == m2.id);
}

TEST_CASE("enqueue 100, pending count tracks") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();
    for (int i = 0; i < 100; ++i) store.enqueue(make_message("meter-" + std::to_string(i % 7)));
    CHECK(store.pending_count() == 100);
    auto counts = store.counts();
    CHECK(counts.pending == 100);
    CHECK(counts.in_flight == 0);
}

TEST_CASE("plaintext never reaches disk") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();
    Message msg = make_message();
    msg.body["secret_reading"] = std::string("SENTINEL-CONFIDENTIAL-9731");
    store.enqueue(msg);
    store.append_log(4, "probe event with SENTINEL-CONFIDENTIAL-9731");
    for (const auto& entry : fs::directory_iterator(dir.path)) {
        auto content = read_file(entry.path());
        CHECK(content.find("SENTINEL-CONFIDENTIAL-9731") == std::string::npos);
        CHECK(content.find("secret_reading") == std::string::npos);
    }
}

TEST_CASE("ack transitions and errors") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();
    Message msg = make_message();
    store.enqueue(msg);

    // ack of a pending (never dequeued) record is fine: the transition matters
    auto batch = store.dequeue_batch(1);
    REQUIRE(batch.items.size() == 1);
    store.ack(msg.id);
    CHECK(store.counts().acked == 1);
    store.ack(msg.id); // idempotent

    CHECK_THROWS_AS(store.ack("not-an-id"), Error);
    try {
        store.ack("not-an-id");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownMessage);
    }
}

TEST_CASE("requeue returns in_flight records to pending") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();
    Message msg = make_message();
    store.enqueue(msg);
    store.dequeue_batch(1);
    CHECK(store.counts().in_flight == 1);
    store.requeue(msg.id);
    CHECK(store.counts().pending == 1);
    auto again = store.dequeue_batch(1);
    REQUIRE(again.items.size() == 1);
    CHECK(again.items[0].first == msg.id);
}

TEST_CASE("purge respects retention") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();
    Message m1 = make_message();
    Message m2 = make_message();
    store.enqueue(m1);
    store.enqueue(m2);
    store.dequeue_batch(2);
    store.ack(m1.id);

    // fresh ack survives a 30-day retention window
    CHECK(store.purge_acked(30ll * 24 * 3600 * 1000) == 0);
    // zero retention purges it immediately
    CHECK(store.purge_acked(0) == 1);
    CHECK(store.counts().acked == 0);
    CHECK(store.counts().in_flight == 1); // m2 untouched

    // purged ids may be reused without tripping the duplicate check? No:
    // the id is gone from the store, so a re-enqueue is accepted as new.
    CHECK_NOTHROW(store.enqueue(m1));
}

TEST_CASE("recover resets in_flight, preserves acked, matches the state-machine oracle") {
    TempDir dir;
    std::vector<Message> messages;
    {
        SecureStore store(dir.path, test_key());
        store.recover();
        for (int i = 0; i < 10; ++i) {
            messages.push_back(make_message());
            store.enqueue(messages.back());
        }
        auto batch = store.dequeue_batch(4);
        REQUIRE(batch.items.size() == 4);
        // simulated crash: drop the handle without acking
    }
    {
        SecureStore store(dir.path, test_key());
        auto report = store.recover();
        CHECK(report.restored == 4);
        CHECK(report.pending == 10);
        CHECK(report.quarantined == 0);

        auto batch = store.dequeue_batch(4);
        for (const auto& [id, msg] : batch.items) store.ack(id);
        store.dequeue_batch(2); // 2 in flight at crash time
    }
    {
        SecureStore store(dir.path, test_key());
        auto report = store.recover();
        CHECK(report.restored == 2);
        CHECK(report.pending == 6); // 10 - 4 acked
        CHECK(store.counts().acked == 4);
    }
}

TEST_CASE("recover on an empty store") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    auto report = store.recover();
    CHECK(report.restored == 0);
    CHECK(report.pending == 0);
    CHECK(report.quarantined == 0);
}

TEST_CASE("wrong key cannot read records") {
    TempDir dir;
    Message msg = make_message();
    {
        SecureStore store(dir.path, test_key());
        store.recover();
        store.enqueue(msg);
    }
    auto other_key = test_key();
    other_key[0] ^= 0xff;
    SecureStore store(dir.path, other_key);
    store.recover();
    auto batch = store.dequeue_batch(1);
    CHECK(batch.items.empty());
    REQUIRE(batch.integrity_failures.size() == 1);
    CHECK(batch.integrity_failures[0] == msg.id);
}

TEST_CASE("security log chains from a zero genesis and verifies") {
    TempDir dir;
    SecureStore store(dir.path, test_key());
    store.recover();
    auto e1 = store.append_log(5, "gateway started");
    auto e2 = store.append_log(6, "auth ok");
    auto e3 = store.append_log(4, "auth failed");
    CHECK(e1.seq == 1);
    CHECK(e2.seq == 2);
    CHECK(e3.seq == 3);
    CHECK(e1.prev_digest == std::array<std::uint8_t, 32>{});
    CHECK(e2.prev_digest == e1.digest);
    CHECK(e3.prev_digest == e2.digest);
    CHECK(store.verify_log().ok);

    CHECK_THROWS_AS(store.append_log(8, "out of range"), Error);
    CHECK_THROWS_AS(store.append_log(-1, "out of range"), Error);
}

TEST_CASE("verify_log_file works standalone and detects truncation") {
    TempDir dir;
    {
        SecureStore store(dir.path, test_key());
        store.recover();
        for (int i = 0; i < 5; ++i) store.append_log(6, "event " + std::to_string(i));
    }
    CHECK(SecureStore::verify_log_file(dir.path, test_key()).ok);

    // drop the tail line: detected via the persisted expected-seq counter
    auto log_path = dir.path / "seclog.log";
    auto content = read_file(log_path);
    auto cut = content.rfind('\n', content.size() - 2);
    write_file(log_path, content.substr(0, cut + 1));
    auto result = SecureStore::verify_log_file(dir.path, test_key());
    CHECK_FALSE(result.ok);
    REQUIRE(result.first_bad_seq.has_value());
    CHECK(*result.first_bad_seq == 5);
}

TEST_CASE("single-byte flips anywhere in the stores are detected") {
    TempDir dir;
    std::vector<std::string> ids;
    {
        SecureStore store(dir.path, test_key());
        store.recover();
        for (int i = 0; i < 8; ++i) {
            Message m = make_message();
            store.enqueue(m);
            ids.push_back(m.id);
        }
        store.dequeue_batch(3);
        store.ack(ids[0]);
        for (int i = 0; i < 8; ++i) store.append_log(5, "event " + std::to_string(i));
    }

    oracle::Rng rng(0xfeedface);
    int detected = 0;
    const int trials = 120;
    for (int trial = 0; trial < trials; ++trial) {
        fs::path victim = (trial % 2 == 0) ? dir.path / "records.log" : dir.path / "seclog.log";
        std::string original = read_file(victim);
        std::string mutated = original;
        std::size_t pos = rng.below(mutated.size());
        std::uint8_t bit = 1u << rng.below(8);
        mutated[pos] = static_cast<char>(mutated[pos] ^ bit);
        if (mutated == original) continue;
        write_file(victim, mutated);

        bool caught = false;
        try {
            SecureStore store(dir.path, test_key());
            auto rec = store.recover();
            if (rec.quarantined > 0) caught = true;
            if (!caught) {
                auto batch = store.dequeue_batch(100);
                if (!batch.integrity_failures.empty()) caught = true;
                if (!caught && batch.items.size() + store.counts().acked +
                                       store.counts().in_flight <
                                   8)
                    caught = true;
            }
            if (!caught && !store.verify_log().ok) caught = true;
        } catch (const Error&) {
            caught = true; // magic/header damage surfaces at open
        }
        if (caught) ++detected;
        write_file(victim, original);
    }
    CHECK(detected == trials);
}

TEST_CASE("corrupt record lines are quarantined and reported, not dropped silently") {
    TempDir dir;
    Message keeper = make_message();
    {
        SecureStore store(dir.path, test_key());
        store.recover();
        store.enqueue(keeper);
    }
    {
        std::ofstream out(dir.path / "records.log", std::ios::app | std::ios::binary);
        out << "this is not a record line\n";
    }
    SecureStore store(dir.path, test_key());
    auto report = store.recover();
    CHECK(report.quarantined == 1);
    CHECK(report.pending == 1);
    auto batch = store.dequeue_batch(10);
    REQUIRE(batch.items.size() == 1);
    CHECK(batch.items[0].second == keeper);
}

TEST_CASE("nonces never repeat across restarts") {
    TempDir dir;
    std::set<std::string> nonces;
    for (int run = 0; run < 3; ++run) {
        SecureStore store(dir.path, test_key());
        store.recover();
        for (int i = 0; i < 50; ++i) store.enqueue(make_message());
    }
    // read nonce fields straight off the record lines
    std::ifstream in(dir.path / "records.log");
    std::string line;
    std::getline(in, line); // magic
    while (std::getline(in, line)) {
        auto pos = line.find("\"nonce\":\"");
        REQUIRE(pos != std::string::npos);
        nonces.insert(line.substr(pos + 9, 24));
    }
    CHECK(nonces.size() == 150);
}
