#include "rehearse/auth.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstdlib>

#include "rehearse/error.hpp"

namespace rehearse::api {

TokenAuthority::TokenAuthority(std::string secret) : secret_(std::move(secret)) {
  if (secret_.empty()) throw Error(ErrorCode::InvalidConfig, "token secret is empty");
}

std::optional<TokenAuthority> TokenAuthority::from_env() {
  const char* s = std::getenv(kTokenSecretEnv);
  if (!s || !*s) return std::nullopt;
  return TokenAuthority(s);
}

std::string TokenAuthority::sign(std::string_view message) const {
  unsigned char mac[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), secret_.data(), static_cast<int>(secret_.size()),
       reinterpret_cast<const unsigned char*>(message.data()), message.size(), mac, &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[mac[i] >> 4];
    out += hex[mac[i] & 0xF];
  }
  return out;
}

std::string TokenAuthority::issue(Role role, std::string_view subject) const {
  if (subject.empty()) throw Error(ErrorCode::BadRequest, "token subject is empty");
  std::string body = std::string(to_string(role)) + "." + std::string(subject);
  return body + "." + sign(body);
}

Principal TokenAuthority::verify(std::string_view token) const {
  const auto first = token.find('.');
  const auto last = token.rfind('.');
  if (first == std::string_view::npos || first == last) throw Error(ErrorCode::Unauthorized, "malformed token");
  const auto body = token.substr(0, last);
  const auto mac = token.substr(last + 1);
  const auto expected = sign(body);
  if (mac.size() != expected.size() || CRYPTO_memcmp(mac.data(), expected.data(), mac.size()) != 0) {
    throw Error(ErrorCode::Unauthorized, "bad token signature");
  }
  Principal p;
  try {
    p.role = parse_role(token.substr(0, first));
  } catch (const Error&) {
    throw Error(ErrorCode::Unauthorized, "unknown role");
  }
  p.subject = std::string(token.substr(first + 1, last - first - 1));
  if (p.subject.empty()) throw Error(ErrorCode::Unauthorized, "empty subject");
  return p;
}

Principal TokenAuthority::verify_header(std::string_view header) const {
  constexpr std::string_view prefix = "Bearer ";
  if (!header.starts_with(prefix)) throw Error(ErrorCode::Unauthorized, "missing bearer token");
  return verify(header.substr(prefix.size()));
}

std::string_view to_string(Role role) { return role == Role::analyst ? "analyst" : "participant"; }

Role parse_role(std::string_view text) {
  if (text == "participant") return Role::participant;
  if (text == "analyst") return Role::analyst;
  throw Error(ErrorCode::BadRequest, "unknown role '" + std::string(text) + "'");
}

}  // namespace rehearse::api
