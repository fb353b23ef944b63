//! Runs emitted scripts against live PostgreSQL / MySQL servers.
//!
//! Backends are configured only through `REGMAP_PG_URL` and
//! `REGMAP_MYSQL_URL` (or the equivalent config-file keys). A backend
//! without a locator is disabled and every call on it reports
//! [`ScriptOutcome::Skipped`].

use std::env;
use std::fmt;

use thiserror::Error;

use crate::sqlgen::{emit_ddl, SqlDialect, SqlScript};

pub const PG_URL_VAR: &str = "REGMAP_PG_URL";
pub const MYSQL_URL_VAR: &str = "REGMAP_MYSQL_URL";

#[derive(Debug, Error)]
pub enum DbError {
    #[error("cannot connect to {backend}: {message}")]
    Connect { backend: SqlDialect, message: String },
    /// Server message, verbatim.
    #[error("{0}")]
    Sql(String),
}

impl From<postgres::Error> for DbError {
    fn from(e: postgres::Error) -> Self {
        match e.as_db_error() {
            Some(db) => DbError::Sql(db.message().to_string()),
            None => DbError::Sql(e.to_string()),
        }
    }
}

impl From<mysql::Error> for DbError {
    fn from(e: mysql::Error) -> Self {
        match e {
            mysql::Error::MySqlError(server) => DbError::Sql(server.message),
            other => DbError::Sql(other.to_string()),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct BackendConfig {
    pub dialect: SqlDialect,
    locator: Option<String>,
}

// Locators carry credentials; keep them out of debug output.
impl fmt::Debug for BackendConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendConfig")
            .field("dialect", &self.dialect)
            .field("enabled", &self.enabled())
            .finish()
    }
}

impl BackendConfig {
    pub fn new(dialect: SqlDialect, locator: Option<String>) -> Self {
        Self {
            dialect,
            locator: locator.filter(|l| !l.trim().is_empty()),
        }
    }

    pub fn disabled(dialect: SqlDialect) -> Self {
        Self::new(dialect, None)
    }

    pub fn enabled(&self) -> bool {
        self.locator.is_some()
    }

    pub fn name(&self) -> &'static str {
        self.dialect.tag()
    }

    /// Environment variable that enables this backend.
    pub fn env_var(&self) -> &'static str {
        if self.dialect.is_mysql() {
            MYSQL_URL_VAR
        } else {
            PG_URL_VAR
        }
    }
}

/// One config per dialect. A MySQL locator enables both storage engines.
pub fn backends_from_locators(pg: Option<String>, mysql: Option<String>) -> Vec<BackendConfig> {
    vec![
        BackendConfig::new(SqlDialect::Postgres, pg),
        BackendConfig::new(SqlDialect::MysqlInnodb, mysql.clone()),
        BackendConfig::new(SqlDialect::MysqlMyisam, mysql),
    ]
}

pub fn backends_from_env() -> Vec<BackendConfig> {
    backends_from_locators(env::var(PG_URL_VAR).ok(), env::var(MYSQL_URL_VAR).ok())
}

pub type TextRow = Vec<Option<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptOutcome {
    /// The backend is disabled.
    Skipped,
    /// Total rows affected; no statement returned rows.
    Affected(u64),
    /// Rows returned by the last row-producing statement.
    Rows(Vec<TextRow>),
}

impl ScriptOutcome {
    pub fn rows(&self) -> &[TextRow] {
        match self {
            ScriptOutcome::Rows(rows) => rows,
            _ => &[],
        }
    }
}

enum Connection {
    Postgres(Box<postgres::Client>),
    Mysql(Box<mysql::Conn>),
}

/// A single connection to one backend. Not shared between threads.
pub struct Session {
    dialect: SqlDialect,
    conn: Connection,
}

fn mysql_value(v: mysql::Value) -> Option<String> {
    use mysql::Value;
    match v {
        Value::NULL => None,
        Value::Bytes(b) => Some(String::from_utf8_lossy(&b).into_owned()),
        Value::Int(i) => Some(i.to_string()),
        Value::UInt(u) => Some(u.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Double(f) => Some(f.to_string()),
        other => Some(other.as_sql(true)),
    }
}

impl Session {
    /// Opens a session, or `Ok(None)` for a disabled backend.
    pub fn connect(config: &BackendConfig) -> Result<Option<Session>, DbError> {
        let Some(locator) = &config.locator else {
            return Ok(None);
        };
        let connect_err = |message: String| DbError::Connect {
            backend: config.dialect,
            message,
        };
        let conn = if config.dialect.is_mysql() {
            let opts = mysql::Opts::from_url(locator).map_err(|e| connect_err(e.to_string()))?;
            let conn = mysql::Conn::new(opts).map_err(|e| connect_err(e.to_string()))?;
            Connection::Mysql(Box::new(conn))
        } else {
            let client = postgres::Client::connect(locator, postgres::NoTls).map_err(|e| connect_err(e.to_string()))?;
            Connection::Postgres(Box::new(client))
        };
        Ok(Some(Session {
            dialect: config.dialect,
            conn,
        }))
    }

    pub fn dialect(&self) -> SqlDialect {
        self.dialect
    }

    /// Runs one statement; returns `(affected, rows)` where `rows` is
    /// `Some` for row-producing statements.
    pub fn run(&mut self, statement: &str) -> Result<(u64, Option<Vec<TextRow>>), DbError> {
        match &mut self.conn {
            Connection::Postgres(client) => {
                let mut affected = 0;
                let mut rows: Option<Vec<TextRow>> = None;
                for msg in client.simple_query(statement)? {
                    match msg {
                        postgres::SimpleQueryMessage::Row(row) => {
                            let fields = (0..row.len()).map(|i| row.get(i).map(str::to_string)).collect();
                            rows.get_or_insert_with(Vec::new).push(fields);
                        }
                        postgres::SimpleQueryMessage::CommandComplete(n) => affected += n,
                        postgres::SimpleQueryMessage::RowDescription(_) => {
                            rows.get_or_insert_with(Vec::new);
                        }
                        _ => {}
                    }
                }
                Ok((affected, rows))
            }
            Connection::Mysql(conn) => {
                use mysql::prelude::Queryable;
                let mut result = conn.query_iter(statement)?;
                let mut rows: Option<Vec<TextRow>> = None;
                let mut affected = 0;
                while let Some(set) = result.iter() {
                    let has_columns = !set.columns().as_ref().is_empty();
                    if has_columns {
                        rows.get_or_insert_with(Vec::new);
                    }
                    affected += set.affected_rows();
                    for row in set {
                        let row = row?;
                        rows.get_or_insert_with(Vec::new)
                            .push(row.unwrap().into_iter().map(mysql_value).collect());
                    }
                }
                Ok((affected, rows))
            }
        }
    }

    pub fn execute_script(&mut self, script: &SqlScript) -> Result<ScriptOutcome, DbError> {
        let mut affected = 0;
        let mut last_rows = None;
        for stmt in script.statements() {
            let (n, rows) = self.run(stmt)?;
            affected += n;
            if rows.is_some() {
                last_rows = rows;
            }
        }
        Ok(match last_rows {
            Some(rows) => ScriptOutcome::Rows(rows),
            None => ScriptOutcome::Affected(affected),
        })
    }

    /// Drops and recreates the benchmark schema.
    pub fn reset_schema(&mut self) -> Result<(), DbError> {
        self.execute_script(&emit_ddl(self.dialect)).map(|_| ())
    }

    pub fn count_regions(&mut self) -> Result<u64, DbError> {
        let (_, rows) = self.run("SELECT count(*) FROM regions")?;
        rows.and_then(|r| r.into_iter().next())
            .and_then(|r| r.into_iter().next().flatten())
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| DbError::Sql("count(*) returned no value".into()))
    }
}

/// Connects, runs `script`, disconnects. Disabled backends are skipped.
pub fn execute_script(config: &BackendConfig, script: &SqlScript) -> Result<ScriptOutcome, DbError> {
    match Session::connect(config)? {
        Some(mut session) => session.execute_script(script),
        None => Ok(ScriptOutcome::Skipped),
    }
}

pub fn reset_schema(config: &BackendConfig) -> Result<ScriptOutcome, DbError> {
    match Session::connect(config)? {
        Some(mut session) => {
            session.reset_schema()?;
            Ok(ScriptOutcome::Affected(0))
        }
        None => Ok(ScriptOutcome::Skipped),
    }
}
