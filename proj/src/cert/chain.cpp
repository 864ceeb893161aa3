#include "quicaudit/cert/chain.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/err.h>
#include <openssl/x509.h>

#include <algorithm>
#include <memory>

#include "quicaudit/cert/der.hpp"
#include "quicaudit/error.hpp"

namespace quicaudit::cert {

namespace {

constexpr std::uint8_t kOidRsa[] = {0x2a, 0x86, 0x48, 0x86, 0xf7, 0x0d, 0x01, 0x01, 0x01};
constexpr std::uint8_t kOidEc[] = {0x2a, 0x86, 0x48, 0xce, 0x3d, 0x02, 0x01};
constexpr std::uint8_t kOidP256[] = {0x2a, 0x86, 0x48, 0xce, 0x3d, 0x03, 0x01, 0x07};
constexpr std::uint8_t kOidP384[] = {0x2b, 0x81, 0x04, 0x00, 0x22};
constexpr std::uint8_t kOidSan[] = {0x55, 0x1d, 0x11};

template <std::size_t N>
bool equals(ByteView v, const std::uint8_t (&oid)[N]) {
  return v.size() == N && std::equal(v.begin(), v.end(), oid);
}

struct X509Free {
  void operator()(X509* x) const { X509_free(x); }
};
struct EvpFree {
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
struct BioFree {
  void operator()(BIO* b) const { BIO_free(b); }
};

std::string name_text(const X509_NAME* name) {
  std::unique_ptr<BIO, BioFree> bio(BIO_new(BIO_s_mem()));
  X509_NAME_print_ex(bio.get(), name, 0, XN_FLAG_RFC2253);
  char* data = nullptr;
  const long n = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(n));
}

void analyse_key(CertRecord& rec, ByteView der, const der::Tlv& spki) {
  const auto parts = der::children(der, spki);
  if (parts.size() != 2) throw ParseError("SubjectPublicKeyInfo needs two elements", spki.offset);
  const auto alg = der::children(der, parts[0]);
  if (alg.empty() || alg[0].tag != der::kOid) throw ParseError("missing key algorithm OID", parts[0].offset);
  const ByteView oid = der::content(der, alg[0]);
  rec.key_oid = der::oid_to_string(oid);
  if (equals(oid, kOidRsa)) {
    // BIT STRING: unused-bits byte, then RSAPublicKey SEQUENCE.
    const ByteView bits = der::content(der, parts[1]);
    if (bits.size() < 2) throw ParseError("empty RSA key", parts[1].offset);
    const ByteView inner = bits.subspan(1);
    const auto seq = der::read(inner, 0);
    const auto ints = der::children(inner, seq);
    if (ints.empty() || ints[0].tag != der::kInteger) throw ParseError("bad RSA key", parts[1].offset);
    ByteView mod = der::content(inner, ints[0]);
    while (!mod.empty() && mod.front() == 0) mod = mod.subspan(1);
    std::uint32_t nbits = static_cast<std::uint32_t>(mod.size() * 8);
    if (!mod.empty())
      for (std::uint8_t top = mod.front(); !(top & 0x80); top <<= 1) --nbits;
    rec.key_bits = nbits;
    rec.key_algo = nbits == 2048 ? KeyAlgo::kRsa2048 : nbits == 4096 ? KeyAlgo::kRsa4096 : KeyAlgo::kOther;
  } else if (equals(oid, kOidEc) && alg.size() > 1 && alg[1].tag == der::kOid) {
    const ByteView curve = der::content(der, alg[1]);
    if (equals(curve, kOidP256)) {
      rec.key_algo = KeyAlgo::kEcdsa256;
      rec.key_bits = 256;
    } else if (equals(curve, kOidP384)) {
      rec.key_algo = KeyAlgo::kEcdsa384;
      rec.key_bits = 384;
    }
  }
}

void analyse_extensions(CertRecord& rec, ByteView der, const der::Tlv& wrapper) {
  const auto inner = der::children(der, wrapper);
  if (inner.size() != 1 || inner[0].tag != der::kSequence)
    throw ParseError("extensions wrapper must hold one SEQUENCE", wrapper.offset);
  for (const auto& ext : der::children(der, inner[0])) {
    const auto parts = der::children(der, ext);
    if (parts.empty() || parts[0].tag != der::kOid) throw ParseError("extension without OID", ext.offset);
    if (!equals(der::content(der, parts[0]), kOidSan)) continue;
    rec.san_bytes += ext.total();
    const auto& value = parts.back();
    if (value.tag != der::kOctetString) throw ParseError("extension value is not an OCTET STRING", value.offset);
    const ByteView names = der::content(der, value);
    const auto seq = der::read(names, 0);
    rec.san_count += static_cast<std::uint32_t>(der::children(names, seq).size());
  }
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kLeaf: return "LEAF";
    case Role::kIntermediate: return "INTERMEDIATE";
    case Role::kRoot: return "ROOT";
  }
  return "?";
}

std::string_view to_string(KeyAlgo k) {
  switch (k) {
    case KeyAlgo::kRsa2048: return "RSA-2048";
    case KeyAlgo::kRsa4096: return "RSA-4096";
    case KeyAlgo::kEcdsa256: return "ECDSA-256";
    case KeyAlgo::kEcdsa384: return "ECDSA-384";
    case KeyAlgo::kOther: return "OTHER";
  }
  return "?";
}

KeyAlgo parse_key_algo(std::string_view s) {
  for (auto k : {KeyAlgo::kRsa2048, KeyAlgo::kRsa4096, KeyAlgo::kEcdsa256, KeyAlgo::kEcdsa384, KeyAlgo::kOther})
    if (to_string(k) == s) return k;
  throw ParseError("unknown key algorithm '" + std::string(s) + "'", 0);
}

std::string_view to_string(ChainSource s) {
  switch (s) {
    case ChainSource::kQuic: return "QUIC";
    case ChainSource::kHttps: return "HTTPS";
    case ChainSource::kFile: return "FILE";
  }
  return "?";
}

ChainSource parse_chain_source(std::string_view s) {
  for (auto v : {ChainSource::kQuic, ChainSource::kHttps, ChainSource::kFile})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown chain source '" + std::string(s) + "'");
}

std::string_view to_string(Field f) {
  switch (f) {
    case Field::kVersion: return "version";
    case Field::kSerial: return "serial";
    case Field::kSignatureAlgo: return "signature_algo";
    case Field::kIssuer: return "issuer";
    case Field::kValidity: return "validity";
    case Field::kSubject: return "subject";
    case Field::kPublicKey: return "public_key";
    case Field::kExtensions: return "extensions";
    case Field::kSignature: return "signature";
  }
  return "?";
}

std::uint64_t CertRecord::field_sum() const {
  std::uint64_t s = 0;
  for (auto v : field_sizes) s += v;
  return s;
}

CertRecord parse_certificate(ByteView der, std::size_t index) {
  CertRecord rec;
  const auto outer = der::read(der, 0);
  if (outer.tag != der::kSequence) throw ParseError("certificate is not a SEQUENCE", 0);
  if (outer.total() != der.size()) throw ParseError("trailing bytes after certificate", outer.end());
  rec.der.assign(der.begin(), der.end());
  rec.der_len = der.size();

  const auto top = der::children(der, outer);
  if (top.size() != 3 || top[0].tag != der::kSequence || top[1].tag != der::kSequence ||
      top[2].tag != der::kBitString)
    throw ParseError("certificate must hold TBS, algorithm and signature", outer.offset);
  const auto& tbs = top[0];
  auto set = [&](Field f, std::uint64_t v) { rec.field_sizes[static_cast<std::size_t>(f)] += v; };
  rec.structural_overhead = outer.header_len + tbs.header_len;
  set(Field::kSignatureAlgo, top[1].total());
  set(Field::kSignature, top[2].total());

  const auto fields = der::children(der, tbs);
  std::size_t i = 0;
  if (i < fields.size() && fields[i].tag == der::kContext0) set(Field::kVersion, fields[i++].total());
  const Field order[] = {Field::kSerial, Field::kSignatureAlgo, Field::kIssuer, Field::kValidity,
                         Field::kSubject, Field::kPublicKey};
  const std::uint8_t tags[] = {der::kInteger, der::kSequence, der::kSequence, der::kSequence,
                               der::kSequence, der::kSequence};
  std::size_t issuer_i = 0, subject_i = 0, spki_i = 0;
  for (std::size_t k = 0; k < 6; ++k, ++i) {
    if (i >= fields.size() || fields[i].tag != tags[k])
      throw ParseError(std::string("missing or malformed ") + std::string(to_string(order[k])),
                       i < fields.size() ? fields[i].offset : tbs.end());
    set(order[k], fields[i].total());
    if (order[k] == Field::kIssuer) issuer_i = i;
    if (order[k] == Field::kSubject) subject_i = i;
    if (order[k] == Field::kPublicKey) spki_i = i;
  }
  for (; i < fields.size(); ++i) {
    const auto& f = fields[i];
    if (f.tag == 0x81 || f.tag == 0xa1 || f.tag == 0x82 || f.tag == 0xa2) {
      rec.structural_overhead += f.total();  // issuer/subject unique IDs
    } else if (f.tag == der::kContext3) {
      set(Field::kExtensions, f.total());
      analyse_extensions(rec, der, f);
    } else {
      throw ParseError("unexpected element in TBSCertificate", f.offset);
    }
  }

  const auto issuer = der::whole(der, fields[issuer_i]);
  const auto subject = der::whole(der, fields[subject_i]);
  rec.issuer.assign(issuer.begin(), issuer.end());
  rec.subject.assign(subject.begin(), subject.end());
  rec.spki_digest = sha256(der::whole(der, fields[spki_i]));
  analyse_key(rec, der, fields[spki_i]);

  const unsigned char* p = der.data();
  std::unique_ptr<X509, X509Free> x509(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
  if (!x509) throw ParseError("certificate rejected by X.509 decoder", 0);
  rec.subject_text = name_text(X509_get_subject_name(x509.get()));
  rec.issuer_text = name_text(X509_get_issuer_name(x509.get()));
  if (rec.issuer == rec.subject) {
    std::unique_ptr<EVP_PKEY, EvpFree> key(X509_get_pubkey(x509.get()));
    rec.self_signed = key && X509_verify(x509.get(), key.get()) == 1;
  }
  rec.role = rec.self_signed ? Role::kRoot : (index == 0 ? Role::kLeaf : Role::kIntermediate);
  return rec;
}

ChainRecord chain_from_certs(std::vector<Bytes> ders, std::string domain, ChainSource source) {
  if (ders.empty()) throw ParseError("empty certificate chain", 0);
  ChainRecord chain;
  chain.domain = std::move(domain);
  chain.source = source;
  Bytes non_leaf;
  for (std::size_t i = 0; i < ders.size(); ++i) {
    chain.certs.push_back(parse_certificate(ders[i], i));
    chain.total_len += chain.certs.back().der_len;
    if (i > 0) non_leaf.insert(non_leaf.end(), ders[i].begin(), ders[i].end());
  }
  for (std::size_t i = 0; i + 1 < chain.certs.size(); ++i)
    if (chain.certs[i].issuer != chain.certs[i + 1].subject) chain.ordered_correctly = false;
  chain.parent_chain_id = sha256(non_leaf);
  return chain;
}

ChainRecord parse_chain(ByteView blob, std::string domain, ChainSource source) {
  if (blob.empty()) throw ParseError("empty input", 0);
  std::vector<Bytes> ders;
  const std::string_view text(reinterpret_cast<const char*>(blob.data()), blob.size());
  if (text.find("-----BEGIN") != std::string_view::npos) {
    std::unique_ptr<BIO, BioFree> bio(BIO_new_mem_buf(blob.data(), static_cast<int>(blob.size())));
    while (true) {
      char* name = nullptr;
      char* header = nullptr;
      unsigned char* data = nullptr;
      long len = 0;
      if (PEM_read_bio(bio.get(), &name, &header, &data, &len) != 1) break;
      const bool is_cert = std::string_view(name) == "CERTIFICATE";
      if (is_cert) ders.emplace_back(data, data + len);
      OPENSSL_free(name);
      OPENSSL_free(header);
      OPENSSL_free(data);
    }
    ERR_clear_error();
    if (ders.empty()) throw ParseError("no CERTIFICATE blocks in PEM input", 0);
  } else {
    std::size_t at = 0;
    while (at < blob.size()) {
      const auto tlv = der::read(blob, at);
      if (tlv.tag != der::kSequence) throw ParseError("expected certificate SEQUENCE", at);
      try {
        ders.emplace_back(blob.begin() + at, blob.begin() + tlv.end());
        parse_certificate(ders.back(), 0);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), at + e.offset());
      }
      at = tlv.end();
    }
  }
  return chain_from_certs(std::move(ders), std::move(domain), source);
}

ChainRecord load_chain_file(const std::string& path, ChainSource source) {
  const Bytes blob = read_file(path);
  return parse_chain(blob, path, source);
}

Bytes to_der(const ChainRecord& chain) {
  Bytes out;
  for (const auto& c : chain.certs) out.insert(out.end(), c.der.begin(), c.der.end());
  return out;
}

std::string to_pem(const CertRecord& cert) {
  std::unique_ptr<BIO, BioFree> bio(BIO_new(BIO_s_mem()));
  PEM_write_bio(bio.get(), "CERTIFICATE", "", cert.der.data(), static_cast<long>(cert.der.size()));
  char* data = nullptr;
  const long n = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(n));
}

std::string to_pem(const ChainRecord& chain) {
  std::string out;
  for (const auto& c : chain.certs) out += to_pem(c);
  return out;
}

std::uint64_t tls_certificate_message_len(const ChainRecord& chain) {
  std::uint64_t n = 4 + 1 + 3;  // handshake header, context length, list length
  for (const auto& c : chain.certs) n += 3 + c.der_len + 2;
  return n;
}

}  // namespace quicaudit::cert
