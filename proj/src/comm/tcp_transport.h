// Copyright 2026 The YASGD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>

#include "yasgd/comm/transport.h"

namespace yasgd::comm {

// Rendezvous through rank 0 at options.rendezvous, then one connection to the
// ring successor and one from the predecessor. Throws BootstrapError when the
// handshake is rejected or the timeout expires.
std::unique_ptr<Transport> ConnectTcpRing(const BootstrapOptions& options);

}  // namespace yasgd::comm
