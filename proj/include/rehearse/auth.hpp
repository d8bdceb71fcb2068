#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace rehearse::api {

inline constexpr const char* kTokenSecretEnv = "REHEARSE_TOKEN_SECRET";

enum class Role { participant, analyst };

struct Principal {
  Role role = Role::participant;
  std::string subject;  // participant id, or analyst name

  bool is_analyst() const { return role == Role::analyst; }
};

/// Static bearer tokens of the form `<role>.<subject>.<hex hmac-sha256>`,
/// signed with a shared secret.
class TokenAuthority {
 public:
  /// Throws InvalidConfig for an empty secret.
  explicit TokenAuthority(std::string secret);
  /// Reads the secret from REHEARSE_TOKEN_SECRET; nullopt when unset.
  static std::optional<TokenAuthority> from_env();

  std::string issue(Role role, std::string_view subject) const;
  /// Throws Unauthorized on any malformed or forged token.
  Principal verify(std::string_view token) const;
  /// Accepts a full `Authorization` header value ("Bearer <token>").
  Principal verify_header(std::string_view header) const;

 private:
  std::string sign(std::string_view message) const;
  std::string secret_;
};

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

}  // namespace rehearse::api
