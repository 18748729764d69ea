// Copyright 2026 The ile Authors
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

// Umbrella header. io.hpp is left out so that library users do not pull in
// the JSON dependency unless they ask for it.

#ifndef ILE_ILE_HPP
#define ILE_ILE_HPP

#include "ile/chain.hpp"
#include "ile/errors.hpp"
#include "ile/fock.hpp"
#include "ile/inverse.hpp"
#include "ile/multimode.hpp"
#include "ile/protocol.hpp"
#include "ile/trotter.hpp"
#include "ile/version.hpp"

#endif  // ILE_ILE_HPP
