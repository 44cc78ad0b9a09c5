#include "scg/tls_policy.hpp"

#include <algorithm>

namespace scg::tls {

const char* to_string(ProtocolVersion v) {
    switch (v) {
    case ProtocolVersion::SSL2: return "SSL2";
    case ProtocolVersion::SSL3: return "SSL3";
    case ProtocolVersion::TLS1_0: return "TLS1.0";
    case ProtocolVersion::TLS1_1: return "TLS1.1";
    case ProtocolVersion::TLS1_2: return "TLS1.2";
    case ProtocolVersion::TLS1_3: return "TLS1.3";
    case ProtocolVersion::DTLS1_2: return "DTLS1.2";
    }
    return "?";
}

std::optional<ProtocolVersion> parse_protocol_version(const std::string& text) {
    if (text == "SSL2") return ProtocolVersion::SSL2;
    if (text == "SSL3") return ProtocolVersion::SSL3;
    if (text == "TLS1.0" || text == "TLS1_0") return ProtocolVersion::TLS1_0;
    if (text == "TLS1.1" || text == "TLS1_1") return ProtocolVersion::TLS1_1;
    if (text == "TLS1.2" || text == "TLS1_2") return ProtocolVersion::TLS1_2;
    if (text == "TLS1.3" || text == "TLS1_3") return ProtocolVersion::TLS1_3;
    if (text == "DTLS1.2" || text == "DTLS1_2") return ProtocolVersion::DTLS1_2;
    return std::nullopt;
}

const char* to_string(Violation v) {
    switch (v) {
    case Violation::V01_VersionBelowMinimum: return "V01_VersionBelowMinimum";
    case Violation::V02_SuiteNotAllowed: return "V02_SuiteNotAllowed";
    case Violation::V03_StaticKeyExchange: return "V03_StaticKeyExchange";
    case Violation::V04_CompressionEnabled: return "V04_CompressionEnabled";
    case Violation::V05_DhGroupTooSmall: return "V05_DhGroupTooSmall";
    case Violation::V06_EcdhCurveTooSmall: return "V06_EcdhCurveTooSmall";
    case Violation::V07_MissingClientCertificate: return "V07_MissingClientCertificate";
    case Violation::V08_AnonymousSuite: return "V08_AnonymousSuite";
    case Violation::V09_SymmetricKeyTooSmall: return "V09_SymmetricKeyTooSmall";
    case Violation::V10_BlockSizeTooSmall: return "V10_BlockSizeTooSmall";
    case Violation::V11_DowngradeFallback: return "V11_DowngradeFallback";
    }
    return "?";
}

bool PolicyDecision::has(Violation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

namespace {

// Version ranking for the floor comparison; DTLS 1.2 evaluates at the TLS 1.2
// level ("all requirements regarding TLS apply to DTLS in the same manner").
int version_rank(ProtocolVersion v) {
    switch (v) {
    case ProtocolVersion::SSL2: return 0;
    case ProtocolVersion::SSL3: return 1;
    case ProtocolVersion::TLS1_0: return 2;
    case ProtocolVersion::TLS1_1: return 3;
    case ProtocolVersion::TLS1_2: return 4;
    case ProtocolVersion::DTLS1_2: return 4;
    case ProtocolVersion::TLS1_3: return 5;
    }
    return 0;
}

bool is_ssl(ProtocolVersion v) {
    return v == ProtocolVersion::SSL2 || v == ProtocolVersion::SSL3;
}

struct CipherInfo {
    int sym_bits;
    int block_bits;
};

// Bulk-cipher token → (key bits, block bits); block 0 marks stream ciphers.
std::optional<CipherInfo> cipher_info(const std::string& tail) {
    auto starts = [&](const char* p) { return tail.rfind(p, 0) == 0; };
    if (starts("NULL")) return CipherInfo{0, 0};
    if (starts("RC4_40")) return CipherInfo{40, 0};
    if (starts("RC4_128")) return CipherInfo{128, 0};
    if (starts("RC2_CBC_40")) return CipherInfo{40, 64};
    if (starts("DES40")) return CipherInfo{40, 64};
    if (starts("DES_CBC")) return CipherInfo{56, 64};
    if (starts("3DES_EDE")) return CipherInfo{112, 64};
    if (starts("IDEA")) return CipherInfo{128, 64};
    if (starts("SEED")) return CipherInfo{128, 128};
    if (starts("AES_128")) return CipherInfo{128, 128};
    if (starts("AES_256")) return CipherInfo{256, 128};
    if (starts("CAMELLIA_128")) return CipherInfo{128, 128};
    if (starts("CAMELLIA_256")) return CipherInfo{256, 128};
    if (starts("ARIA_128")) return CipherInfo{128, 128};
    if (starts("ARIA_256")) return CipherInfo{256, 128};
    if (starts("CHACHA20_POLY1305")) return CipherInfo{256, 0};
    return std::nullopt;
}

} // namespace

std::optional<SuiteProperties> suite_properties(const std::string& name) {
    if (name.rfind("TLS_", 0) != 0) return std::nullopt;
    SuiteProperties props;
    props.name = name;

    auto with = name.find("_WITH_");
    if (with == std::string::npos) {
        // TLS 1.3 naming: TLS_<cipher>_<hash>, always (EC)DHE under the hood,
        // but the suite name pins no kex; classified separately.
        auto info = cipher_info(name.substr(4));
        if (!info) return std::nullopt;
        props.kex = KexFamily::Tls13;
        props.symmetric_bits = info->sym_bits;
        props.block_bits = info->block_bits;
        return props;
    }

    std::string kex = name.substr(4, with - 4);
    std::string tail = name.substr(with + 6);
    auto info = cipher_info(tail);
    if (!info) return std::nullopt;
    props.symmetric_bits = info->sym_bits;
    props.block_bits = info->block_bits;

    if (kex == "DHE_RSA" || kex == "DHE_DSS" || kex == "DHE_RSA_EXPORT" ||
        kex == "DHE_DSS_EXPORT") {
        props.kex = KexFamily::Dhe;
        props.ephemeral_dh = true;
    } else if (kex == "ECDHE_RSA" || kex == "ECDHE_ECDSA") {
        props.kex = KexFamily::Ecdhe;
        props.ephemeral_ecdh = true;
    } else if (kex == "RSA" || kex == "RSA_EXPORT") {
        props.kex = KexFamily::StaticRsa;
    } else if (kex == "DH_RSA" || kex == "DH_DSS" || kex == "ECDH_RSA" || kex == "ECDH_ECDSA") {
        props.kex = KexFamily::StaticDh;
    } else if (kex == "PSK" || kex == "RSA_PSK") {
        props.kex = KexFamily::Psk;
        props.uses_psk = true;
    } else if (kex == "DHE_PSK") {
        props.kex = KexFamily::Psk;
        props.uses_psk = true;
        props.ephemeral_dh = true;
    } else if (kex == "ECDHE_PSK") {
        props.kex = KexFamily::Psk;
        props.uses_psk = true;
        props.ephemeral_ecdh = true;
    } else if (kex == "SRP_SHA" || kex == "SRP_SHA_RSA" || kex == "SRP_SHA_DSS") {
        props.kex = KexFamily::Srp;
        props.ephemeral_dh = true;
    } else if (kex == "DH_anon" || kex == "ECDH_anon" || kex == "NULL") {
        props.kex = KexFamily::Anonymous;
        props.anonymous = true;
        props.ephemeral_dh = kex == "DH_anon";
        props.ephemeral_ecdh = kex == "ECDH_anon";
    } else {
        return std::nullopt;
    }
    return props;
}

const std::vector<std::string>& suite_registry_snapshot() {
    static const std::vector<std::string> names = {
        "TLS_NULL_WITH_NULL_NULL",
        "TLS_RSA_WITH_NULL_MD5",
        "TLS_RSA_WITH_NULL_SHA",
        "TLS_RSA_WITH_NULL_SHA256",
        "TLS_RSA_EXPORT_WITH_RC4_40_MD5",
        "TLS_RSA_WITH_RC4_128_MD5",
        "TLS_RSA_WITH_RC4_128_SHA",
        "TLS_RSA_EXPORT_WITH_DES40_CBC_SHA",
        "TLS_RSA_WITH_DES_CBC_SHA",
        "TLS_RSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_RSA_WITH_IDEA_CBC_SHA",
        "TLS_RSA_WITH_AES_128_CBC_SHA",
        "TLS_RSA_WITH_AES_256_CBC_SHA",
        "TLS_RSA_WITH_AES_128_CBC_SHA256",
        "TLS_RSA_WITH_AES_256_CBC_SHA256",
        "TLS_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_RSA_WITH_AES_256_GCM_SHA384",
        "TLS_RSA_WITH_AES_128_CCM",
        "TLS_RSA_WITH_AES_256_CCM",
        "TLS_RSA_WITH_CAMELLIA_128_CBC_SHA",
        "TLS_RSA_WITH_CAMELLIA_256_CBC_SHA",
        "TLS_RSA_WITH_SEED_CBC_SHA",
        "TLS_DH_DSS_WITH_3DES_EDE_CBC_SHA",
        "TLS_DH_RSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_DH_DSS_WITH_AES_128_CBC_SHA",
        "TLS_DH_RSA_WITH_AES_128_CBC_SHA",
        "TLS_DH_DSS_WITH_AES_256_CBC_SHA",
        "TLS_DH_RSA_WITH_AES_256_CBC_SHA",
        "TLS_DH_DSS_WITH_AES_128_GCM_SHA256",
        "TLS_DH_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_DH_DSS_WITH_AES_256_GCM_SHA384",
        "TLS_DH_RSA_WITH_AES_256_GCM_SHA384",
        "TLS_DHE_RSA_EXPORT_WITH_DES40_CBC_SHA",
        "TLS_DHE_DSS_WITH_DES_CBC_SHA",
        "TLS_DHE_RSA_WITH_DES_CBC_SHA",
        "TLS_DHE_DSS_WITH_3DES_EDE_CBC_SHA",
        "TLS_DHE_RSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_DHE_DSS_WITH_AES_128_CBC_SHA",
        "TLS_DHE_RSA_WITH_AES_128_CBC_SHA",
        "TLS_DHE_DSS_WITH_AES_256_CBC_SHA",
        "TLS_DHE_RSA_WITH_AES_256_CBC_SHA",
        "TLS_DHE_DSS_WITH_AES_128_CBC_SHA256",
        "TLS_DHE_RSA_WITH_AES_128_CBC_SHA256",
        "TLS_DHE_DSS_WITH_AES_256_CBC_SHA256",
        "TLS_DHE_RSA_WITH_AES_256_CBC_SHA256",
        "TLS_DHE_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_DHE_RSA_WITH_AES_256_GCM_SHA384",
        "TLS_DHE_DSS_WITH_AES_128_GCM_SHA256",
        "TLS_DHE_DSS_WITH_AES_256_GCM_SHA384",
        "TLS_DHE_RSA_WITH_AES_128_CCM",
        "TLS_DHE_RSA_WITH_AES_256_CCM",
        "TLS_DHE_RSA_WITH_CAMELLIA_128_CBC_SHA",
        "TLS_DHE_RSA_WITH_CAMELLIA_256_CBC_SHA",
        "TLS_DHE_RSA_WITH_CAMELLIA_128_GCM_SHA256",
        "TLS_DHE_RSA_WITH_CAMELLIA_256_GCM_SHA384",
        "TLS_DHE_RSA_WITH_CHACHA20_POLY1305_SHA256",
        "TLS_DHE_RSA_WITH_SEED_CBC_SHA",
        "TLS_DH_anon_WITH_RC4_128_MD5",
        "TLS_DH_anon_WITH_3DES_EDE_CBC_SHA",
        "TLS_DH_anon_WITH_AES_128_CBC_SHA",
        "TLS_DH_anon_WITH_AES_256_CBC_SHA",
        "TLS_DH_anon_WITH_AES_128_CBC_SHA256",
        "TLS_DH_anon_WITH_AES_256_CBC_SHA256",
        "TLS_DH_anon_WITH_AES_128_GCM_SHA256",
        "TLS_DH_anon_WITH_AES_256_GCM_SHA384",
        "TLS_ECDH_ECDSA_WITH_NULL_SHA",
        "TLS_ECDH_ECDSA_WITH_RC4_128_SHA",
        "TLS_ECDH_ECDSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_ECDH_ECDSA_WITH_AES_128_CBC_SHA",
        "TLS_ECDH_ECDSA_WITH_AES_256_CBC_SHA",
        "TLS_ECDH_ECDSA_WITH_AES_128_GCM_SHA256",
        "TLS_ECDH_ECDSA_WITH_AES_256_GCM_SHA384",
        "TLS_ECDHE_ECDSA_WITH_NULL_SHA",
        "TLS_ECDHE_ECDSA_WITH_RC4_128_SHA",
        "TLS_ECDHE_ECDSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_ECDHE_ECDSA_WITH_AES_128_CBC_SHA",
        "TLS_ECDHE_ECDSA_WITH_AES_256_CBC_SHA",
        "TLS_ECDHE_ECDSA_WITH_AES_128_CBC_SHA256",
        "TLS_ECDHE_ECDSA_WITH_AES_256_CBC_SHA384",
        "TLS_ECDHE_ECDSA_WITH_AES_128_GCM_SHA256",
        "TLS_ECDHE_ECDSA_WITH_AES_256_GCM_SHA384",
        "TLS_ECDHE_ECDSA_WITH_AES_128_CCM",
        "TLS_ECDHE_ECDSA_WITH_AES_256_CCM",
        "TLS_ECDHE_ECDSA_WITH_CHACHA20_POLY1305_SHA256",
        "TLS_ECDH_RSA_WITH_NULL_SHA",
        "TLS_ECDH_RSA_WITH_RC4_128_SHA",
        "TLS_ECDH_RSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_ECDH_RSA_WITH_AES_128_CBC_SHA",
        "TLS_ECDH_RSA_WITH_AES_256_CBC_SHA",
        "TLS_ECDH_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_ECDH_RSA_WITH_AES_256_GCM_SHA384",
        "TLS_ECDHE_RSA_WITH_NULL_SHA",
        "TLS_ECDHE_RSA_WITH_RC4_128_SHA",
        "TLS_ECDHE_RSA_WITH_3DES_EDE_CBC_SHA",
        "TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA",
        "TLS_ECDHE_RSA_WITH_AES_256_CBC_SHA",
        "TLS_ECDHE_RSA_WITH_AES_128_CBC_SHA256",
        "TLS_ECDHE_RSA_WITH_AES_256_CBC_SHA384",
        "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_ECDHE_RSA_WITH_AES_256_GCM_SHA384",
        "TLS_ECDHE_RSA_WITH_ARIA_128_GCM_SHA256",
        "TLS_ECDHE_RSA_WITH_ARIA_256_GCM_SHA384",
        "TLS_ECDHE_RSA_WITH_CAMELLIA_128_GCM_SHA256",
        "TLS_ECDHE_RSA_WITH_CAMELLIA_256_GCM_SHA384",
        "TLS_ECDHE_RSA_WITH_CHACHA20_POLY1305_SHA256",
        "TLS_ECDH_anon_WITH_NULL_SHA",
        "TLS_ECDH_anon_WITH_RC4_128_SHA",
        "TLS_ECDH_anon_WITH_3DES_EDE_CBC_SHA",
        "TLS_ECDH_anon_WITH_AES_128_CBC_SHA",
        "TLS_ECDH_anon_WITH_AES_256_CBC_SHA",
        "TLS_PSK_WITH_RC4_128_SHA",
        "TLS_PSK_WITH_3DES_EDE_CBC_SHA",
        "TLS_PSK_WITH_AES_128_CBC_SHA",
        "TLS_PSK_WITH_AES_256_CBC_SHA",
        "TLS_PSK_WITH_AES_128_GCM_SHA256",
        "TLS_PSK_WITH_AES_256_GCM_SHA384",
        "TLS_PSK_WITH_CHACHA20_POLY1305_SHA256",
        "TLS_DHE_PSK_WITH_AES_128_CBC_SHA",
        "TLS_DHE_PSK_WITH_AES_256_CBC_SHA",
        "TLS_DHE_PSK_WITH_AES_128_GCM_SHA256",
        "TLS_DHE_PSK_WITH_AES_256_GCM_SHA384",
        "TLS_DHE_PSK_WITH_CHACHA20_POLY1305_SHA256",
        "TLS_RSA_PSK_WITH_AES_128_CBC_SHA",
        "TLS_RSA_PSK_WITH_AES_256_CBC_SHA",
        "TLS_RSA_PSK_WITH_AES_128_GCM_SHA256",
        "TLS_RSA_PSK_WITH_AES_256_GCM_SHA384",
        "TLS_ECDHE_PSK_WITH_AES_128_CBC_SHA",
        "TLS_ECDHE_PSK_WITH_AES_256_CBC_SHA",
        "TLS_ECDHE_PSK_WITH_CHACHA20_POLY1305_SHA256",
        "TLS_SRP_SHA_WITH_AES_128_CBC_SHA",
        "TLS_SRP_SHA_RSA_WITH_AES_128_CBC_SHA",
        "TLS_SRP_SHA_DSS_WITH_AES_128_CBC_SHA",
        "TLS_SRP_SHA_WITH_AES_256_CBC_SHA",
        "TLS_SRP_SHA_RSA_WITH_AES_256_CBC_SHA",
        "TLS_AES_128_GCM_SHA256",
        "TLS_AES_256_GCM_SHA384",
        "TLS_CHACHA20_POLY1305_SHA256",
        "TLS_AES_128_CCM_SHA256",
    };
    return names;
}

Policy default_policy() {
    Policy p;
    p.allowed_suites = {
        "TLS_DHE_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256",
        "TLS_DHE_RSA_WITH_AES_256_GCM_SHA384",
        "TLS_ECDHE_RSA_WITH_AES_256_GCM_SHA384",
    };
    return p;
}

PolicyDecision evaluate_handshake(const HandshakeProfile& profile, const Policy& policy) {
    PolicyDecision decision;
    auto violate = [&](Violation v) { decision.violations.push_back(v); };

    // SSL is rejected unconditionally; policy overrides cannot re-enable it.
    if (is_ssl(profile.protocol_version) ||
        version_rank(profile.protocol_version) < version_rank(policy.min_version)) {
        violate(Violation::V01_VersionBelowMinimum);
    }

    bool allowed = std::find(policy.allowed_suites.begin(), policy.allowed_suites.end(),
                             profile.cipher_suite) != policy.allowed_suites.end();
    if (!allowed) violate(Violation::V02_SuiteNotAllowed);

    // Unknown suite names get no property checks; V02 above already denies.
    if (auto props = suite_properties(profile.cipher_suite)) {
        bool static_kex = props->kex == KexFamily::StaticRsa ||
                          props->kex == KexFamily::StaticDh || props->uses_psk;
        if (policy.forbid_static_keys && static_kex) violate(Violation::V03_StaticKeyExchange);
        if (props->anonymous) violate(Violation::V08_AnonymousSuite);
        if (props->symmetric_bits < policy.min_symmetric_bits)
            violate(Violation::V09_SymmetricKeyTooSmall);
        // Stream ciphers (block_bits 0) cannot satisfy a block-size floor.
        if (props->block_bits < policy.min_block_bits)
            violate(Violation::V10_BlockSizeTooSmall);
        if (props->ephemeral_dh && profile.dh_group_bits < policy.min_dh_bits)
            violate(Violation::V05_DhGroupTooSmall);
        if (props->ephemeral_ecdh && profile.ecdh_curve_bits < policy.min_ecdh_bits)
            violate(Violation::V06_EcdhCurveTooSmall);
    }

    if (policy.forbid_compression && profile.compression_enabled)
        violate(Violation::V04_CompressionEnabled);
    if (policy.require_mutual_auth && !profile.client_certificate_presented)
        violate(Violation::V07_MissingClientCertificate);
    if (policy.strict && profile.downgrade_fallback_offered)
        violate(Violation::V11_DowngradeFallback);

    std::sort(decision.violations.begin(), decision.violations.end());
    decision.accepted = decision.violations.empty();
    return decision;
}

AuditReport audit_profiles(const std::vector<HandshakeProfile>& profiles, const Policy& policy) {
    AuditReport report;
    for (const auto& profile : profiles) {
        AuditEntry entry{profile, evaluate_handshake(profile, policy)};
        ++report.evaluated;
        if (entry.decision.accepted)
            ++report.accepted;
        else
            ++report.rejected;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace scg::tls
