//! On-disk corpus directory: `vocab.txt`, `users.txt`, `products.txt` and
//! `entries.tsv` (`user_idx \t product_idx \t rating \t w:c w:c ...`).

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Corpus, Entry, Vocabulary};
use crate::error::{Error, Result};

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for l in lines {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for l in reader.lines() {
        let l = l?;
        if !l.is_empty() {
            lines.push(l);
        }
    }
    Ok(lines)
}

fn parse_entry(line: &str, lineno: usize) -> Result<Entry> {
    let bad = |what: &str| Error::Corpus(format!("entries.tsv line {lineno}: {what}"));
    let mut f = line.split('\t');
    let user = f
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("user index"))?;
    let product = f
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("product index"))?;
    let rating = f
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("rating"))?;
    let counts = f
        .next()
        .ok_or_else(|| bad("counts"))?
        .split_whitespace()
        .map(|pair| {
            let (w, c) = pair.split_once(':')?;
            Some((w.parse().ok()?, c.parse().ok()?))
        })
        .collect::<Option<Vec<(usize, u32)>>>()
        .ok_or_else(|| bad("word:count pair"))?;
    Ok(Entry {
        user,
        product,
        rating,
        counts,
    })
}

impl Corpus {
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_lines(&dir.join("vocab.txt"), self.vocab.words())?;
        write_lines(&dir.join("users.txt"), &self.users)?;
        write_lines(&dir.join("products.txt"), &self.products)?;
        let mut out = BufWriter::new(File::create(dir.join("entries.tsv"))?);
        for e in &self.entries {
            let counts: Vec<String> = e.counts.iter().map(|(w, c)| format!("{w}:{c}")).collect();
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                e.user,
                e.product,
                e.rating,
                counts.join(" ")
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let vocab = Vocabulary::new(read_lines(&dir.join("vocab.txt"))?)?;
        let users = read_lines(&dir.join("users.txt"))?;
        let products = read_lines(&dir.join("products.txt"))?;
        let entries = read_lines(&dir.join("entries.tsv"))?
            .iter()
            .enumerate()
            .map(|(i, l)| parse_entry(l, i + 1))
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(users, products, vocab, entries)
    }
}
