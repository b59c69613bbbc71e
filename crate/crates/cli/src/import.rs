//! Conversion of CSV exports (for example of the Faux Mesa High network)
//! into the native edge-list and attribute formats.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ergm_core::io::{write_attributes, write_edge_list};
use ergm_core::{Attribute, AttributeTable, Graph};

use crate::args::ImportArgs;

fn read_csv(path: &Path, has_headers: bool) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    if has_headers {
        rows.push(reader.headers()?.clone());
    }
    for record in reader.records() {
        rows.push(record.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(rows)
}

struct Vertices {
    count: usize,
    ids: Option<HashMap<String, usize>>,
    attributes: AttributeTable,
}

fn read_vertices(path: &Path, id_column: Option<&str>) -> Result<Vertices> {
    let rows = read_csv(path, true)?;
    let (header, body) = rows.split_first().expect("header row present");
    let mut columns: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (r, row) in body.iter().enumerate() {
        if row.len() != header.len() {
            bail!(
                "{}: row {} has {} fields, the header has {}",
                path.display(),
                r + 2,
                row.len(),
                header.len()
            );
        }
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v.to_string());
        }
    }
    let mut ids = None;
    let mut attributes = AttributeTable::new();
    for (name, values) in header.iter().zip(columns) {
        if Some(name) == id_column {
            let mut map = HashMap::new();
            for (i, v) in values.iter().enumerate() {
                if map.insert(v.clone(), i).is_some() {
                    bail!("{}: duplicate vertex id `{v}`", path.display());
                }
            }
            ids = Some(map);
        } else if !name.is_empty() {
            // An empty name is the row-name column some exporters prepend.
            attributes.insert(name.to_string(), Attribute::new(&values));
        }
    }
    if let (Some(col), None) = (id_column, &ids) {
        bail!("{}: no column named `{col}`", path.display());
    }
    Ok(Vertices {
        count: body.len(),
        ids,
        attributes,
    })
}

pub fn run(a: &ImportArgs, out: &Path) -> Result<()> {
    let vertices = match &a.vertices {
        Some(path) => Some(read_vertices(path, a.id_column.as_deref())?),
        None if a.id_column.is_some() => bail!("--id-column needs --vertices"),
        None => None,
    };
    let rows = read_csv(&a.edges, false)?;
    let mut pairs = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        if row.len() < 2 {
            bail!(
                "{}: line {} has fewer than two fields",
                a.edges.display(),
                r + 1
            );
        }
        let resolve = |field: &str| -> Option<usize> {
            match vertices.as_ref().and_then(|v| v.ids.as_ref()) {
                Some(ids) => ids.get(field).copied(),
                None => field
                    .parse::<usize>()
                    .ok()
                    .and_then(|k| k.checked_sub(a.index_base)),
            }
        };
        match (resolve(&row[0]), resolve(&row[1])) {
            (Some(i), Some(j)) => pairs.push((i, j)),
            // The first row may be a header.
            _ if r == 0 => continue,
            _ => bail!(
                "{}: line {}: unknown vertex `{}` or `{}`",
                a.edges.display(),
                r + 1,
                &row[0],
                &row[1]
            ),
        }
    }
    let n = match (&vertices, a.nodes) {
        (Some(v), _) => v.count,
        (None, Some(n)) => n,
        (None, None) => pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0),
    };
    let mut graph = Graph::empty(n, a.directed);
    for &(i, j) in &pairs {
        if !graph
            .has_edge(i, j)
            .with_context(|| format!("edge ({i}, {j}) in {}", a.edges.display()))?
        {
            graph.toggle_edge(i, j)?;
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let edges_path = out.join(format!("{}.edges", a.name));
    let mut buf = Vec::new();
    writeln!(buf, "# imported from {}", a.edges.display())?;
    write_edge_list(&graph, &mut buf)?;
    fs::write(&edges_path, buf).with_context(|| format!("writing {}", edges_path.display()))?;
    if let Some(v) = &vertices {
        if !v.attributes.is_empty() {
            let path = out.join(format!("{}.attrs", a.name));
            let mut buf = Vec::new();
            write_attributes(&v.attributes, n, &mut buf)?;
            fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    crate::emit(&format!(
        "{} nodes, {} edges -> {}\n",
        graph.n(),
        graph.edge_count(),
        edges_path.display()
    ))
}
