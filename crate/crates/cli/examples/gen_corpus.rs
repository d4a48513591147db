//! Writes the bundled synthetic micro-IR corpus.
//!
//! `cargo run -p apimine-cli --example gen_corpus -- data/corpus`
//!
//! Each family of methods uses one or two framework types with a few
//! optional calls and branches, so every family yields keys with well over
//! 25 occurrences. A handful of short getters and one branch-heavy method
//! exercise the exclusion rules.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PER_FAMILY: usize = 60;

struct Body {
    lines: Vec<String>,
}

impl Body {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn op(&mut self, text: impl Into<String>) {
        self.lines.push(format!("  {}", text.into()));
    }

    fn label(&mut self, name: &str) {
        self.lines.push(format!("  :{name}"));
    }

    fn method(&self, header: &str) -> String {
        let mut out = format!(".method {header}\n");
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        out.push_str(".end\n");
        out
    }
}

fn reader(i: usize, rng: &mut ChaCha8Rng) -> String {
    let mut b = Body::new();
    b.op("new-instance v1 java.io.FileReader");
    b.op(format!("const v2 \"notes{i}.txt\""));
    b.op("invoke-direct java.io.FileReader.<init> (v1, v2)");
    b.op("new-instance v0 java.io.BufferedReader");
    b.op("invoke-direct java.io.BufferedReader.<init> (v0, v1)");
    let guarded = rng.gen_bool(0.5);
    if guarded {
        b.op("invoke-virtual java.io.BufferedReader.ready (v0) boolean");
        b.op("move-result v3");
        b.op("if eq v3 0 :done");
    }
    if rng.gen_bool(0.3) {
        b.op("const v2 \"16\"");
        b.op("invoke-virtual java.io.BufferedReader.skip (v0, v2) long");
    }
    for _ in 0..rng.gen_range(1..=3) {
        b.op("invoke-virtual java.io.BufferedReader.readLine (v0) java.lang.String");
        b.op("move-result v4");
    }
    if guarded {
        b.label("done");
    }
    b.op("invoke-virtual java.io.BufferedReader.close (v0)");
    if rng.gen_bool(0.25) {
        b.op("invoke-virtual java.io.FileReader.close (v1)");
    }
    b.op("return");
    b.method(&format!("com.example.notes.Store{i}.load 6 (v5:com.example.notes.Store{i})"))
}

fn player(i: usize, rng: &mut ChaCha8Rng) -> String {
    let mut b = Body::new();
    b.op("new-instance v0 android.media.MediaPlayer");
    b.op("invoke-direct android.media.MediaPlayer.<init> (v0)");
    b.op(format!("const v1 \"track{i}.mp3\""));
    b.op("invoke-virtual android.media.MediaPlayer.setDataSource (v0, v1)");
    b.op("invoke-virtual android.media.MediaPlayer.prepare (v0)");
    if rng.gen_bool(0.4) {
        b.op("const v2 1");
        b.op("invoke-virtual android.media.MediaPlayer.setLooping (v0, v2)");
    }
    b.op("invoke-virtual android.media.MediaPlayer.start (v0)");
    let check = rng.gen_bool(0.5);
    if check {
        b.op("invoke-virtual android.media.MediaPlayer.isPlaying (v0) boolean");
        b.op("move-result v3");
        b.op("if eq v3 0 :stop");
        b.op("invoke-virtual android.media.MediaPlayer.pause (v0)");
        b.label("stop");
    }
    b.op("invoke-virtual android.media.MediaPlayer.stop (v0)");
    b.op("invoke-virtual android.media.MediaPlayer.release (v0)");
    b.op("return");
    b.method(&format!("com.example.media.Screen{i}.play 5 (v4:com.example.media.Screen{i})"))
}

fn cursor(i: usize, rng: &mut ChaCha8Rng) -> String {
    let mut b = Body::new();
    b.op(format!("const v1 \"SELECT * FROM t{i}\""));
    b.op("invoke-virtual android.database.sqlite.SQLiteDatabase.rawQuery (v7, v1) android.database.Cursor");
    b.op("move-result v0");
    b.op("invoke-virtual android.database.Cursor.moveToFirst (v0) boolean");
    b.op("move-result v3");
    b.op("if eq v3 0 :close");
    b.label("next");
    b.op("const v4 0");
    b.op("invoke-virtual android.database.Cursor.getString (v0, v4) java.lang.String");
    b.op("move-result v5");
    if rng.gen_bool(0.4) {
        b.op("invoke-virtual android.database.Cursor.getInt (v0, v4) int");
        b.op("move-result v2");
    }
    if rng.gen_bool(0.6) {
        b.op("invoke-virtual android.database.Cursor.moveToNext (v0) boolean");
        b.op("move-result v3");
        b.op("if ne v3 0 :next");
    }
    b.label("close");
    b.op("invoke-virtual android.database.Cursor.close (v0)");
    if rng.gen_bool(0.3) {
        b.op("invoke-virtual android.database.sqlite.SQLiteDatabase.close (v7)");
    }
    b.op("return");
    b.method(&format!(
        "com.example.db.Dao{i}.query 8 (v6:com.example.db.Dao{i}, v7:android.database.sqlite.SQLiteDatabase)"
    ))
}

fn builder(i: usize, rng: &mut ChaCha8Rng) -> String {
    let mut b = Body::new();
    b.op("new-instance v0 java.lang.StringBuilder");
    b.op("invoke-direct java.lang.StringBuilder.<init> (v0)");
    b.op(format!("const v1 \"item{i}\""));
    for _ in 0..rng.gen_range(1..=3) {
        b.op("invoke-virtual java.lang.StringBuilder.append (v0, v1) java.lang.StringBuilder");
    }
    if rng.gen_bool(0.5) {
        b.op("invoke-virtual java.lang.StringBuilder.length (v0) int");
        b.op("move-result v2");
        b.op("if le v2 0 :out");
        b.op("invoke-virtual java.lang.StringBuilder.reverse (v0) java.lang.StringBuilder");
        b.label("out");
    }
    b.op("invoke-virtual java.lang.StringBuilder.toString (v0) java.lang.String");
    b.op("move-result v2");
    b.op("return v2");
    b.method(&format!("com.example.text.Fmt{i}.render 4 (v3:com.example.text.Fmt{i})"))
}

fn getter(i: usize) -> String {
    let mut b = Body::new();
    b.op(format!("iget v0 v1 com.example.misc.Bean{i}.value"));
    b.op("return v0");
    b.method(&format!("com.example.misc.Bean{i}.getValue 2 (v1:com.example.misc.Bean{i})"))
}

/// Eleven independent checks around one call: over the default branch cap.
fn branchy() -> String {
    let mut b = Body::new();
    b.op("new-instance v0 java.lang.StringBuilder");
    b.op("invoke-direct java.lang.StringBuilder.<init> (v0)");
    for j in 0..11 {
        b.op(format!("if eq v1 {j} :skip{j}"));
        b.op("invoke-virtual java.lang.StringBuilder.append (v0, v1) java.lang.StringBuilder");
        b.label(&format!("skip{j}"));
    }
    b.op("invoke-virtual java.lang.StringBuilder.toString (v0) java.lang.String");
    b.op("return");
    b.method("com.example.misc.Flags.describe 2 (v1:int)")
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/corpus".into()));
    std::fs::create_dir_all(&dir).expect("output directory");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    type Family = fn(usize, &mut ChaCha8Rng) -> String;
    let families: [(&str, Family); 4] = [("notes", reader), ("media", player), ("db", cursor), ("text", builder)];
    for (name, make) in families {
        let mut text = format!("# Synthetic {name} methods, generated by the gen_corpus example.\n");
        for i in 0..PER_FAMILY {
            text.push('\n');
            text.push_str(&make(i, &mut rng));
        }
        std::fs::write(dir.join(format!("{name}.mir")), text).expect("write");
    }
    let mut misc = String::from("# Methods the extractor skips.\n");
    for i in 0..5 {
        misc.push('\n');
        misc.push_str(&getter(i));
    }
    misc.push('\n');
    misc.push_str(&branchy());
    std::fs::write(dir.join("misc.mir"), misc).expect("write");
}
