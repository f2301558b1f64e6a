// Copyright (c) 2026, The tvgan Authors. All rights reserved.
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

#include "tvgan/errors.hpp"
#include "tvgan/tensor.hpp"
#include "tvgan/parallel.hpp"
#include "tvgan/ops.hpp"
#include "tvgan/tv.hpp"
#include "tvgan/networks.hpp"
#include "tvgan/losses.hpp"
#include "tvgan/adam.hpp"
#include "tvgan/checkpoint.hpp"
#include "tvgan/image_io.hpp"
#include "tvgan/data.hpp"
#include "tvgan/fid.hpp"
#include "tvgan/config.hpp"
#include "tvgan/trainer.hpp"
