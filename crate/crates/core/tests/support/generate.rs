//! Procedural models: storeys of 3 x 3 m cells, each holding one
//! element. Every tenth cell starts a WC that gets a bar across its
//! front, through both transfer spaces, nine cells later. Every fifth
//! cell is a column rated alternately 60 and 120 minutes.

use std::fmt::Write;

pub struct Synthetic {
    pub text: String,
    pub elements: usize,
    pub blocked_wcs: Vec<String>,
    pub weak_columns: Vec<String>,
}

struct Writer {
    out: String,
    next: u64,
}

impl Writer {
    fn add(&mut self, body: &str) -> u64 {
        let id = self.next;
        self.next += 1;
        writeln!(self.out, "#{id}={body};").unwrap();
        id
    }

    fn placement(&mut self, x: f64, y: f64, z: f64, rel: u64) -> u64 {
        let p = self.add(&format!("IFCCARTESIANPOINT(({x:.3},{y:.3},{z:.3}))"));
        let a = self.add(&format!("IFCAXIS2PLACEMENT3D(#{p},$,$)"));
        self.add(&format!("IFCLOCALPLACEMENT(#{rel},#{a})"))
    }

    fn shape(&mut self, corner: [f64; 3], dims: [f64; 3]) -> u64 {
        let c = self.add(&format!("IFCCARTESIANPOINT(({:.3},{:.3},{:.3}))", corner[0], corner[1], corner[2]));
        let b = self.add(&format!("IFCBOUNDINGBOX(#{c},{:.3},{:.3},{:.3})", dims[0], dims[1], dims[2]));
        let r = self.add(&format!("IFCSHAPEREPRESENTATION($,'Box','BoundingBox',(#{b}))"));
        self.add(&format!("IFCPRODUCTDEFINITIONSHAPE($,$,(#{r}))"))
    }
}

fn guid(kind: char, n: usize) -> String {
    format!("{kind}{n:021}")
}

fn refs(ids: &[u64]) -> String {
    ids.iter().map(|i| format!("#{i}")).collect::<Vec<_>>().join(",")
}

/// A model with `storeys * per_storey` elements, one slab per storey
/// included. Units are meters; storeys are 3 m apart.
pub fn synthetic(storeys: usize, per_storey: usize) -> Synthetic {
    assert!(per_storey >= 2);
    let mut w = Writer {
        out: String::from(
            "ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION((''),'2;1');\nFILE_NAME('synthetic.ifc','',(''),(''),'','','');\nFILE_SCHEMA(('IFC2X3'));\nENDSEC;\nDATA;\n",
        ),
        next: 1,
    };
    let oh = w.add("IFCOWNERHISTORY($,$,$,.ADDED.,$,$,$,0)");
    let unit = w.add("IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.)");
    let units = w.add(&format!("IFCUNITASSIGNMENT((#{unit}))"));
    let project = w.add(&format!("IFCPROJECT('{}',#{oh},'Synthetic',$,$,$,$,$,#{units})", guid('P', 0)));
    let origin = w.add("IFCCARTESIANPOINT((0.,0.,0.))");
    let axes = w.add(&format!("IFCAXIS2PLACEMENT3D(#{origin},$,$)"));
    let root = w.add(&format!("IFCLOCALPLACEMENT($,#{axes})"));
    let building = w.add(&format!(
        "IFCBUILDING('{}',#{oh},'Tower',$,$,#{root},$,$,.ELEMENT.,$,$,$)",
        guid('B', 0)
    ));
    w.add(&format!("IFCRELAGGREGATES('{}',#{oh},$,$,#{project},(#{building}))", guid('A', 0)));

    let wc_shape = w.shape([-0.2, 0.0, 0.0], [0.4, 0.7, 0.4]);
    let wall_shape = w.shape([0.2, 0.2, 0.0], [2.6, 0.2, 2.8]);
    let column_shape = w.shape([1.4, 1.4, 0.0], [0.2, 0.2, 2.8]);
    let rail_shape = w.shape([0.0, 0.0, 0.0], [1.8, 0.05, 0.1]);
    let wc_type = w.add(&format!(
        "IFCSANITARYTERMINALTYPE('{}',#{oh},'WC pan',$,$,$,$,$,$,.WCSEAT.)",
        guid('T', 0)
    ));

    let cols = 50;
    let mut storey_ids = Vec::new();
    let mut wcs = Vec::new();
    let mut columns = [Vec::new(), Vec::new()];
    let mut blocked_wcs = Vec::new();
    let mut weak_columns = Vec::new();
    let mut n = 0usize;
    for s in 0..storeys {
        let z = 3.0 * s as f64;
        let storey = w.add(&format!(
            "IFCBUILDINGSTOREY('{}',#{oh},'L{s}',$,$,#{root},$,$,.ELEMENT.,{z:.1})",
            guid('S', s)
        ));
        storey_ids.push(storey);
        let width = 3.0 * cols as f64;
        let depth = 3.0 * (per_storey / cols + 1) as f64;
        let slab_shape = w.shape([0.0, 0.0, -0.2], [width, depth, 0.2]);
        let slab_place = w.placement(0.0, 0.0, z, root);
        let slab = w.add(&format!(
            "IFCSLAB('{}',#{oh},'Slab {s}',$,$,#{slab_place},#{slab_shape},$,.FLOOR.)",
            guid('F', s)
        ));
        let mut contained = vec![slab];
        n += 1;
        let mut last_wc: Option<(f64, f64, String)> = None;
        for i in 0..per_storey - 1 {
            let (cx, cy) = (3.0 * (i % cols) as f64, 3.0 * (i / cols) as f64);
            n += 1;
            let id = match i % 10 {
                0 | 5 => {
                    let place = w.placement(cx + 1.5, cy + 0.5, z, root);
                    let g = guid('W', n);
                    let id = w.add(&format!("IFCFLOWTERMINAL('{g}',#{oh},'WC',$,$,#{place},#{wc_shape},$)"));
                    wcs.push(id);
                    if i % 10 == 0 {
                        last_wc = Some((cx, cy, g));
                    }
                    id
                }
                4 | 8 => {
                    let place = w.placement(cx, cy, z, root);
                    let g = guid('C', n);
                    let id = w.add(&format!("IFCCOLUMN('{g}',#{oh},'Column',$,$,#{place},#{column_shape},$)"));
                    let weak = (i / 4) % 2 == 1;
                    columns[weak as usize].push(id);
                    if weak {
                        weak_columns.push(g);
                    }
                    id
                }
                9 if last_wc.is_some() => {
                    let (wx, wy, g) = last_wc.take().unwrap();
                    let place = w.placement(wx + 0.6, wy + 1.25, z + 0.7, root);
                    blocked_wcs.push(g);
                    w.add(&format!(
                        "IFCRAILING('{}',#{oh},'Grab rail',$,$,#{place},#{rail_shape},$,.HANDRAIL.)",
                        guid('R', n)
                    ))
                }
                _ => {
                    let place = w.placement(cx, cy, z, root);
                    w.add(&format!(
                        "IFCWALL('{}',#{oh},'Wall',$,$,#{place},#{wall_shape},$)",
                        guid('X', n)
                    ))
                }
            };
            contained.push(id);
        }
        w.add(&format!(
            "IFCRELCONTAINEDINSPATIALSTRUCTURE('{}',#{oh},$,$,({}),#{storey})",
            guid('K', s),
            refs(&contained)
        ));
    }
    w.add(&format!(
        "IFCRELAGGREGATES('{}',#{oh},$,$,#{building},({}))",
        guid('A', 1),
        refs(&storey_ids)
    ));
    w.add(&format!(
        "IFCRELDEFINESBYTYPE('{}',#{oh},$,$,({}),#{wc_type})",
        guid('D', 0),
        refs(&wcs)
    ));
    let bearing = w.add("IFCPROPERTYSINGLEVALUE('LoadBearing',$,IFCBOOLEAN(.T.),$)");
    for (k, minutes) in [(0usize, 120), (1, 60)] {
        if columns[k].is_empty() {
            continue;
        }
        let d = w.add(&format!("IFCPROPERTYSINGLEVALUE('FireResistanceDuration',$,IFCINTEGER({minutes}),$)"));
        let pset = w.add(&format!(
            "IFCPROPERTYSET('{}',#{oh},'Pset_ColumnCommon',$,(#{bearing},#{d}))",
            guid('Q', k)
        ));
        w.add(&format!(
            "IFCRELDEFINESBYPROPERTIES('{}',#{oh},$,$,({}),#{pset})",
            guid('E', k),
            refs(&columns[k])
        ));
    }
    w.out.push_str("ENDSEC;\nEND-ISO-10303-21;\n");
    blocked_wcs.sort();
    weak_columns.sort();
    Synthetic {
        text: w.out,
        elements: n,
        blocked_wcs,
        weak_columns,
    }
}
