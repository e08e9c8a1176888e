//! Function tables, sequence files and list-valued flags.

use std::path::Path;

use sumtype_mpc::funcspec::builtin;
use sumtype_mpc::sampling::SequenceGenerator;
use sumtype_mpc::{Alphabet, FunctionTable};

use crate::CliError;

/// A builtin name (`hamming`, `equality`, `sqdiff`, `product`) over
/// `{0..k-1}`, or a path to a table file.
pub fn load_function(spec: &str, alphabets: Option<(usize, usize)>) -> Result<FunctionTable, CliError> {
    if builtin::NAMES.contains(&spec) {
        let (kx, ky) = alphabets.unwrap_or((2, 2));
        if kx != ky {
            return Err(CliError::Usage(format!(
                "builtin `{spec}` needs equal alphabets, got {kx},{ky}"
            )));
        }
        if kx < 2 {
            return Err(CliError::Usage("builtin alphabets need at least 2 symbols".to_string()));
        }
        return Ok(builtin::by_name(spec, kx).expect("name is listed"));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "`{spec}` is neither a builtin ({}) nor a readable file",
            builtin::NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: spec.to_string(),
        source: e,
    })?;
    let table = FunctionTable::parse(&text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
    if let Some((kx, ky)) = alphabets {
        let got = (table.x_alphabet().len(), table.y_alphabet().len());
        if got != (kx, ky) {
            return Err(CliError::Usage(format!(
                "{spec}: table alphabets are {},{}, but --alphabets says {kx},{ky}",
                got.0, got.1
            )));
        }
    }
    Ok(table)
}

/// Whitespace-separated symbols over any number of lines; `#` starts a
/// comment. Errors carry the line number.
pub fn parse_sequence(text: &str, alphabet: &Alphabet, origin: &str) -> Result<Vec<usize>, CliError> {
    let mut seq = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            let symbol = alphabet.index_of(token).ok_or_else(|| CliError::Input {
                origin: origin.to_string(),
                line: i + 1,
                message: format!("unknown symbol `{token}` (alphabet: {})", alphabet.symbols().join(" ")),
            })?;
            seq.push(symbol);
        }
    }
    if seq.is_empty() {
        return Err(CliError::Input {
            origin: origin.to_string(),
            line: text.lines().count().max(1),
            message: "no symbols".to_string(),
        });
    }
    Ok(seq)
}

pub fn read_sequence(path: &Path, alphabet: &Alphabet) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_sequence(&text, alphabet, &path.display().to_string())
}

pub fn parse_generator(name: &str) -> Result<SequenceGenerator, CliError> {
    name.parse().map_err(CliError::Usage)
}

/// `2,2` style pair.
pub fn parse_alphabets(text: &str) -> Result<(usize, usize), CliError> {
    let parts = parse_list(text, "--alphabets")?;
    match parts.as_slice() {
        [k] => Ok((*k, *k)),
        [kx, ky] => Ok((*kx, *ky)),
        _ => Err(CliError::Usage(format!("--alphabets expects `|X|,|Y|`, got `{text}`"))),
    }
}

/// Comma-separated positive integers; the empty string is the empty list.
pub fn parse_list(text: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(CliError::Usage(format!("{flag}: `{t}` is not a positive integer"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_tokens_span_lines() {
        let a = Alphabet::numeric(3);
        let seq = parse_sequence("0 1\n# note\n2  0 # tail\n", &a, "x.txt").unwrap();
        assert_eq!(seq, vec![0, 1, 2, 0]);
    }

    #[test]
    fn unknown_symbol_reports_its_line() {
        let a = Alphabet::numeric(2);
        let err = parse_sequence("0 1\n1\n0 7\n", &a, "x.txt").unwrap_err();
        assert!(err.to_string().starts_with("x.txt:3: unknown symbol `7`"), "{err}");
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let a = Alphabet::numeric(2);
        assert!(parse_sequence("# nothing\n\n", &a, "y.txt").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("4, 16,64", "--n").unwrap(), vec![4, 16, 64]);
        assert!(parse_list("", "--n").unwrap().is_empty());
        assert!(parse_list("3,0", "--n").is_err());
        assert_eq!(parse_alphabets("3").unwrap(), (3, 3));
        assert_eq!(parse_alphabets("2,3").unwrap(), (2, 3));
        assert!(parse_alphabets("2,3,4").is_err());
    }

    #[test]
    fn builtins_need_square_alphabets() {
        assert_eq!(load_function("hamming", None).unwrap().x_alphabet().len(), 2);
        assert_eq!(load_function("sqdiff", Some((4, 4))).unwrap().y_alphabet().len(), 4);
        assert!(load_function("hamming", Some((2, 3))).is_err());
        assert!(load_function("no-such-table", None).is_err());
    }
}
