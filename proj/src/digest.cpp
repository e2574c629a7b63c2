// SPDX-License-Identifier: Apache-2.0

#include "qnc/digest.hpp"

#include <array>
#include <stdexcept>

#include <openssl/evp.h>

namespace qnc {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

} // namespace qnc
