/*
* Copyright (C) 2026 The fieldlab authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include "fieldlab/errors.h"

namespace fieldlab
{

void throw_invalid_config(const std::string& what)
{
    throw InvalidConfig(what);
}

void throw_contract_violation(const std::string& what)
{
    throw ContractViolation(what);
}

} // namespace fieldlab
