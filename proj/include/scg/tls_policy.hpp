#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scg::tls {

enum class ProtocolVersion { SSL2, SSL3, TLS1_0, TLS1_1, TLS1_2, TLS1_3, DTLS1_2 };

const char* to_string(ProtocolVersion v);
std::optional<ProtocolVersion> parse_protocol_version(const std::string& text);

struct HandshakeProfile {
    ProtocolVersion protocol_version = ProtocolVersion::TLS1_2;
    std::string cipher_suite;
    bool compression_enabled = false;
    bool client_certificate_presented = true;
    int dh_group_bits = 0;   // 0 = not applicable
    int ecdh_curve_bits = 0; // 0 = not applicable
    bool downgrade_fallback_offered = false;
};

struct Policy {
    std::vector<std::string> allowed_suites;
    ProtocolVersion min_version = ProtocolVersion::TLS1_2;
    bool require_mutual_auth = true;
    bool forbid_compression = true;
    int min_dh_bits = 2048;
    int min_ecdh_bits = 192;
    int min_symmetric_bits = 128;
    int min_block_bits = 128;
    bool forbid_static_keys = true;
    bool strict = true;
};

enum class Violation {
    V01_VersionBelowMinimum,
    V02_SuiteNotAllowed,
    V03_StaticKeyExchange,
    V04_CompressionEnabled,
    V05_DhGroupTooSmall,
    V06_EcdhCurveTooSmall,
    V07_MissingClientCertificate,
    V08_AnonymousSuite,
    V09_SymmetricKeyTooSmall,
    V10_BlockSizeTooSmall,
    V11_DowngradeFallback,
};

const char* to_string(Violation v);

struct PolicyDecision {
    bool accepted = false;
    std::vector<Violation> violations; // exhaustive, in code order

    bool has(Violation v) const;
};

// Key-exchange family, derived from the IANA suite name.
enum class KexFamily {
    Dhe,        // ephemeral finite-field DH
    Ecdhe,      // ephemeral elliptic-curve DH
    StaticRsa,  // RSA key transport
    StaticDh,   // DH_RSA / DH_DSS / ECDH_RSA / ECDH_ECDSA
    Psk,        // PSK, DHE_PSK, ECDHE_PSK, RSA_PSK
    Srp,
    Anonymous,  // DH_anon / ECDH_anon / NULL
    Tls13,      // TLS 1.3 names carry no kex token
};

struct SuiteProperties {
    std::string name;
    KexFamily kex = KexFamily::StaticRsa;
    bool uses_psk = false;
    bool anonymous = false;
    bool ephemeral_dh = false;   // subject to the DH group floor
    bool ephemeral_ecdh = false; // subject to the ECDH curve floor
    int symmetric_bits = 0;
    int block_bits = 0; // 0 for stream ciphers and NULL
};

// Properties derived from an IANA suite name; nullopt for names the parser
// cannot classify (such suites are still rejected by deny-by-default).
std::optional<SuiteProperties> suite_properties(const std::string& name);

// Bundled snapshot of the IANA TLS cipher-suite registry (names only).
const std::vector<std::string>& suite_registry_snapshot();

Policy default_policy();

PolicyDecision evaluate_handshake(const HandshakeProfile& profile, const Policy& policy);

struct AuditEntry {
    HandshakeProfile profile;
    PolicyDecision decision;
};

struct AuditReport {
    std::vector<AuditEntry> entries;
    int evaluated = 0;
    int accepted = 0;
    int rejected = 0;

    bool all_accepted() const { return rejected == 0; }
};

AuditReport audit_profiles(const std::vector<HandshakeProfile>& profiles, const Policy& policy);

} // namespace scg::tls
