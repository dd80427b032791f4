#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rotograb/hand_service.hpp"

namespace rotograb::protocol {

inline constexpr int kVersion = 1;

/// One `state` message, without trailing newline.
std::string state_message(const service::Snapshot& snapshot, const HandGeometry& geometry,
                          const std::optional<std::string>& id = std::nullopt);

std::string error_message(std::string_view code, std::string_view message,
                          const std::optional<std::string>& id = std::nullopt);

/// Decodes one inbound line, applies it for `client` and returns the reply:
/// the resulting `state` on success, an `err` otherwise. Never throws for
/// bad input.
std::string handle_line(service::HandService& service, const std::string& client, std::string_view line);

}  // namespace rotograb::protocol
