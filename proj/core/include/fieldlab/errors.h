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
#ifndef FIELDLAB_ERRORS_H
#define FIELDLAB_ERRORS_H

#include <stdexcept>
#include <string>

namespace fieldlab
{

/// Base class of all errors raised by fieldlab.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A configuration value is outside its documented domain.
class InvalidConfig : public Error
{
public:
    using Error::Error;
};

/// An operation was called in a state its contract forbids.
class ContractViolation : public Error
{
public:
    using Error::Error;
};

/// Adoption rating requested for an empty decision list.
class UndefinedRating : public Error
{
public:
    using Error::Error;
};

/// A statistical test was given fewer observations than it needs.
class InsufficientSample : public Error
{
public:
    using Error::Error;
};

/// Malformed input file or payload.
class ParseError : public Error
{
public:
    using Error::Error;
};

/// Input data is well-formed but unusable for the requested analysis.
class DataError : public Error
{
public:
    using Error::Error;
};

[[noreturn]] void throw_invalid_config(const std::string& what);
[[noreturn]] void throw_contract_violation(const std::string& what);

} // namespace fieldlab

#endif // FIELDLAB_ERRORS_H
