// Copyright 2026 The AdLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADLM_STATUS_MACROS_H_
#define ADLM_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define ADLM_STATUS_CONCAT_INNER_(a, b) a##b
#define ADLM_STATUS_CONCAT_(a, b) ADLM_STATUS_CONCAT_INNER_(a, b)

#define ADLM_RETURN_IF_ERROR(expr)               \
  do {                                           \
    const ::absl::Status _adlm_status = (expr);  \
    if (!_adlm_status.ok()) return _adlm_status; \
  } while (0)

#define ADLM_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                \
  if (!tmp.ok()) return tmp.status();                \
  lhs = std::move(*tmp)

#define ADLM_ASSIGN_OR_RETURN(lhs, rexpr)                                     \
  ADLM_ASSIGN_OR_RETURN_IMPL_(ADLM_STATUS_CONCAT_(_adlm_statusor_, __LINE__), \
                              lhs, rexpr)

#endif  // ADLM_STATUS_MACROS_H_
