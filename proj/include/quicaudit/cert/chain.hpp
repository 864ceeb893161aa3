#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "quicaudit/bytes.hpp"

namespace quicaudit::cert {

enum class Role : std::uint8_t { kLeaf, kIntermediate, kRoot };
enum class KeyAlgo : std::uint8_t { kRsa2048, kRsa4096, kEcdsa256, kEcdsa384, kOther };
enum class ChainSource : std::uint8_t { kQuic, kHttps, kFile };

// The nine certificate field buckets. signature_algo counts both the
// AlgorithmIdentifier inside the TBS and the outer one.
enum class Field : std::uint8_t {
  kVersion,
  kSerial,
  kSignatureAlgo,
  kIssuer,
  kValidity,
  kSubject,
  kPublicKey,
  kExtensions,
  kSignature,
};
inline constexpr std::size_t kFieldCount = 9;
inline constexpr std::array<Field, kFieldCount> kAllFields = {
    Field::kVersion,   Field::kSerial,    Field::kSignatureAlgo, Field::kIssuer,   Field::kValidity,
    Field::kSubject,   Field::kPublicKey, Field::kExtensions,    Field::kSignature};

std::string_view to_string(Role r);
std::string_view to_string(KeyAlgo k);
std::string_view to_string(ChainSource s);
std::string_view to_string(Field f);
ChainSource parse_chain_source(std::string_view s);
KeyAlgo parse_key_algo(std::string_view s);

struct CertRecord {
  Bytes der;
  std::uint64_t der_len = 0;
  Role role = Role::kLeaf;
  std::array<std::uint64_t, kFieldCount> field_sizes{};
  // Outer and TBS SEQUENCE headers plus unique-ID fields.
  std::uint64_t structural_overhead = 0;
  KeyAlgo key_algo = KeyAlgo::kOther;
  std::string key_oid;
  std::uint32_t key_bits = 0;
  Bytes subject;  // DER Name
  Bytes issuer;
  std::string subject_text;
  std::string issuer_text;
  Sha256Digest spki_digest{};
  bool self_signed = false;
  std::uint64_t san_bytes = 0;  // whole subjectAltName Extension element
  std::uint32_t san_count = 0;

  std::uint64_t field(Field f) const { return field_sizes[static_cast<std::size_t>(f)]; }
  std::uint64_t field_sum() const;
};

// Parses one DER certificate; `index` is its position in the chain and
// decides the role together with self-signedness. Throws ParseError.
CertRecord parse_certificate(ByteView der, std::size_t index = 0);

struct ChainRecord {
  std::vector<CertRecord> certs;  // leaf first, as delivered
  std::uint64_t total_len = 0;
  bool ordered_correctly = true;
  Sha256Digest parent_chain_id{};  // SHA-256 over all non-leaf DER bytes
  ChainSource source = ChainSource::kFile;
  std::string domain;

  const CertRecord& leaf() const { return certs.front(); }
  std::string parent_chain_hex() const { return to_hex(parent_chain_id); }
};

// Accepts concatenated PEM blocks or concatenated DER certificates.
// Throws ParseError (with offset) for malformed input or an empty blob.
ChainRecord parse_chain(ByteView blob, std::string domain = "",
                        ChainSource source = ChainSource::kFile);
ChainRecord chain_from_certs(std::vector<Bytes> ders, std::string domain = "",
                             ChainSource source = ChainSource::kFile);
ChainRecord load_chain_file(const std::string& path, ChainSource source = ChainSource::kFile);

Bytes to_der(const ChainRecord& chain);
std::string to_pem(const ChainRecord& chain);
std::string to_pem(const CertRecord& cert);

// Size of the TLS 1.3 Certificate handshake message carrying the chain
// with empty per-certificate extensions.
std::uint64_t tls_certificate_message_len(const ChainRecord& chain);

}  // namespace quicaudit::cert
